#include "crosscheck/templates.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "crosscheck/errors.hpp"
#include "crosscheck/text_util.hpp"

namespace crosscheck {
namespace {

const std::map<std::string, std::string>& builtin_templates() {
  static const std::map<std::string, std::string> kTemplates = {
      {"rephrase",
       "Rewrite the question below so it asks for exactly the same information using different "
       "wording.\nReply with the rewritten question only.\n\nQuestion:\n{PROMPT}\n"},
      {"expand_before",
       "Write a short paragraph of background context that introduces the topic of the question "
       "below.\nDo not answer the question. Reply with the context only.\n\nQuestion:\n{PROMPT}\n"},
      {"expand_after",
       "Write one or two clarifying follow-up questions that make the information need of the "
       "question below more explicit.\nReply with the follow-up questions only.\n\nQuestion:\n"
       "{PROMPT}\n"},
      {"break_down",
       "Break the question below into a numbered list of simpler sub-questions that together "
       "cover the original information need.\nReply with the sub-questions only.\n\nQuestion:\n"
       "{PROMPT}\n"},
      {"judge_pair",
       "You are checking one sentence of an answer against a reference answer to the same "
       "question.\n\nQuestion:\n{PROMPT}\n\nReference answer:\n{SAMPLE}\n\nSentence to check:\n"
       "{BLOCK}\n\nRules:\n- ACCURATE: the reference answer supports the sentence.\n"
       "- CONTRADICTION: the reference answer directly contradicts the sentence.\n"
       "- NEUTRAL: the reference answer does not contain enough information to decide.\n"
       "Judge only against the reference answer above, not your own knowledge.\n\n"
       "Reply in exactly this format:\nLABEL: <ACCURATE|CONTRADICTION|NEUTRAL>\n"
       "REASON: <one short sentence>\n"},
      {"judge_batch",
       "You are checking each sentence of an answer against a reference answer to the same "
       "question.\n\nQuestion:\n{PROMPT}\n\nReference answer:\n{SAMPLE}\n\nSentences to check:\n"
       "{BLOCKS}\n\nRules:\n- ACCURATE: the reference answer supports the sentence.\n"
       "- CONTRADICTION: the reference answer directly contradicts the sentence.\n"
       "- NEUTRAL: the reference answer does not contain enough information to decide.\n"
       "Judge only against the reference answer above, not your own knowledge.\n\n"
       "Reply with one line per sentence, in order, in exactly this format:\n"
       "<number>: <ACCURATE|CONTRADICTION|NEUTRAL> - <one short reason>\n"},
      {"error_summary",
       "A sentence from an answer disagrees with several independently generated answers to the "
       "same question.\n\nQuestion:\n{PROMPT}\n\nSentence:\n{BLOCK}\n\nReported disagreements:\n"
       "{EVIDENCE}\n\nSummarize in one or two sentences what is wrong with the sentence and how "
       "severe the problem is.\nReply with the summary only.\n"},
      {"correction",
       "A sentence from an answer was found to be unreliable.\n\nQuestion:\n{PROMPT}\n\n"
       "Sentence:\n{BLOCK}\n\nWhat is wrong with it:\n{SUMMARY}\n\nEvidence from independently "
       "generated answers:\n{EVIDENCE}\n\nRewrite the sentence so it is accurate and addresses "
       "the issues above, keeping its role in the answer.\nReply with the corrected sentence "
       "only.\n"},
      {"reflection",
       "An answer to a question was revised sentence by sentence. Review it as a whole.\n\n"
       "Question:\n{PROMPT}\n\nRevised answer:\n{RESPONSE}\n\nIndependently generated answers "
       "for reference:\n{SAMPLES}\n\nProduce the final answer: keep the revised answer's correct "
       "content, fix any remaining factual problems, and make it coherent and complete.\n"
       "Reply with the final answer only.\n"},
  };
  return kTemplates;
}

}  // namespace

PromptTemplates::PromptTemplates() : templates_(builtin_templates()) {}

PromptTemplates::PromptTemplates(const std::string& directory) : templates_(builtin_templates()) {
  if (directory.empty()) return;
  namespace fs = std::filesystem;
  if (!fs::is_directory(directory)) {
    throw ConfigError("template directory does not exist: " + directory);
  }
  for (auto& [name, text] : templates_) {
    fs::path file = fs::path(directory) / (name + ".txt");
    if (!fs::exists(file)) continue;
    std::ifstream in(file, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    text = buffer.str();
  }
}

const std::string& PromptTemplates::raw(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw ConfigError("unknown template: " + name);
  return it->second;
}

std::string PromptTemplates::render(const std::string& name,
                                    const std::map<std::string, std::string>& values) const {
  return render_placeholders(raw(name), values);
}

void PromptTemplates::write_defaults(const std::string& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  for (const auto& [name, text] : builtin_templates()) {
    std::ofstream out(fs::path(directory) / (name + ".txt"), std::ios::binary);
    out << text;
  }
}

}  // namespace crosscheck
