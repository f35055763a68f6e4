#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "negsuite/cooccur.hpp"
#include "negsuite/synthesis.hpp"

namespace negsuite {

// A long-lived child process spoken to one line at a time: each request is
// written as a single line to its stdin and answered by a single line on its
// stdout. stderr is inherited.
class LineProcess {
 public:
  // Throws InputError when argv is empty or the program cannot be started.
  explicit LineProcess(std::vector<std::string> argv);
  ~LineProcess();
  LineProcess(const LineProcess&) = delete;
  LineProcess& operator=(const LineProcess&) = delete;

  // Throws Error when the child exits or closes its stdout early.
  std::string request(std::string_view line);

 private:
  std::vector<std::string> argv_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

// Splits a command string into argv on whitespace; single and double quotes
// group words. Throws InputError on an unterminated quote.
std::vector<std::string> split_command(std::string_view command);

// Sends the text, returns the reply. Empty replies and error lines
// ("ERROR ...") fall back to the input text.
class SubprocessParaphraser final : public Paraphraser {
 public:
  explicit SubprocessParaphraser(std::vector<std::string> argv) : proc_(std::move(argv)) {}
  std::string paraphrase(const std::string& text) override;

 private:
  LineProcess proc_;
};

// Sends "<mediaRef>\t<concept>" (empty mediaRef when absent) and expects
// "present", "absent" or "unknown". Anything else counts as unknown. Verdicts
// are cached so repeated queries within a run agree.
class SubprocessVerifier final : public Verifier {
 public:
  explicit SubprocessVerifier(std::vector<std::string> argv) : proc_(std::move(argv)) {}
  Verdict verify(const std::optional<std::string>& media_ref, const Concept& target) override;

 private:
  LineProcess proc_;
  std::map<std::pair<std::string, std::string>, Verdict> cache_;
};

Verdict parse_verdict(std::string_view s);
std::string_view to_string(Verdict v);

// "identity" or "command:<argv>". Returns nullptr for identity.
std::unique_ptr<Paraphraser> make_paraphraser(std::string_view spec);
// "none" or "command:<argv>". Returns nullptr for none.
std::unique_ptr<Verifier> make_verifier(std::string_view spec);

}  // namespace negsuite
