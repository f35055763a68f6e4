#include "negsuite/hooks.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include "negsuite/errors.hpp"

namespace negsuite {

namespace {

void write_all(int fd, const std::string& data) {
  std::size_t done = 0;
  while (done < data.size()) {
    const auto n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(std::string("hook write failed: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

LineProcess::LineProcess(std::vector<std::string> argv) : argv_(std::move(argv)) {
  if (argv_.empty()) throw InputError("hook command is empty");
  // A hook that dies must surface as an error, not kill us.
  std::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2];   // parent -> child
  int out_pipe[2];  // child -> parent
  int err_pipe[2];  // exec failure report
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0 || ::pipe(err_pipe) != 0) {
    throw Error(std::string("pipe: ") + std::strerror(errno));
  }
  ::fcntl(err_pipe[1], F_SETFD, FD_CLOEXEC);
  ::fcntl(in_pipe[1], F_SETFD, FD_CLOEXEC);
  ::fcntl(out_pipe[0], F_SETFD, FD_CLOEXEC);

  std::vector<char*> args;
  for (auto& a : argv_) args.push_back(a.data());
  args.push_back(nullptr);

  pid_ = ::fork();
  if (pid_ < 0) throw Error(std::string("fork: ") + std::strerror(errno));
  if (pid_ == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    ::close(err_pipe[0]);
    ::execvp(args[0], args.data());
    const int e = errno;
    [[maybe_unused]] auto n = ::write(err_pipe[1], &e, sizeof e);
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  int exec_errno = 0;
  const auto n = ::read(err_pipe[0], &exec_errno, sizeof exec_errno);
  ::close(err_pipe[0]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  if (n == sizeof exec_errno) {
    ::waitpid(pid_, nullptr, 0);
    pid_ = -1;
    throw InputError("cannot start hook '" + argv_[0] + "': " + std::strerror(exec_errno));
  }
}

LineProcess::~LineProcess() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  if (pid_ > 0) ::waitpid(pid_, nullptr, 0);
}

std::string LineProcess::request(std::string_view line) {
  std::string msg(line);
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  msg += '\n';
  write_all(to_child_, msg);
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string reply = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return strip_cr(std::move(reply));
    }
    char chunk[4096];
    const auto n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw Error("hook '" + argv_[0] + "' closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::vector<std::string> split_command(std::string_view command) {
  std::vector<std::string> out;
  std::string cur;
  bool in_word = false;
  char quote = 0;
  for (char c : command) {
    if (quote) {
      if (c == quote) {
        quote = 0;
      } else {
        cur += c;
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      in_word = true;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      if (in_word) out.push_back(std::move(cur));
      cur.clear();
      in_word = false;
    } else {
      cur += c;
      in_word = true;
    }
  }
  if (quote) throw InputError("unterminated quote in hook command");
  if (in_word) out.push_back(std::move(cur));
  return out;
}

std::string SubprocessParaphraser::paraphrase(const std::string& text) {
  auto reply = proc_.request(text);
  if (reply.empty() || reply.starts_with("ERROR")) return text;
  return reply;
}

Verdict parse_verdict(std::string_view s) {
  if (s == "present") return Verdict::present;
  if (s == "absent") return Verdict::absent;
  return Verdict::unknown;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::present: return "present";
    case Verdict::absent: return "absent";
    case Verdict::unknown: return "unknown";
  }
  return "unknown";
}

Verdict SubprocessVerifier::verify(const std::optional<std::string>& media_ref, const Concept& target) {
  const auto key = std::make_pair(media_ref.value_or(""), target.name());
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const auto v = parse_verdict(proc_.request(key.first + "\t" + key.second));
  cache_.emplace(key, v);
  return v;
}

std::unique_ptr<Paraphraser> make_paraphraser(std::string_view spec) {
  if (spec.empty() || spec == "identity") return nullptr;
  if (spec.starts_with("command:")) {
    return std::make_unique<SubprocessParaphraser>(split_command(spec.substr(8)));
  }
  throw InputError("paraphraser must be 'identity' or 'command:<argv>'");
}

std::unique_ptr<Verifier> make_verifier(std::string_view spec) {
  if (spec.empty() || spec == "none") return nullptr;
  if (spec.starts_with("command:")) {
    return std::make_unique<SubprocessVerifier>(split_command(spec.substr(8)));
  }
  throw InputError("verifier must be 'none' or 'command:<argv>'");
}

}  // namespace negsuite
