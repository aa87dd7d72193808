#include "hhnas/external_evaluator.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "hhnas/error.hpp"
#include "hhnas/protocol.hpp"

extern char **environ;

namespace hhnas {

namespace {

std::string errno_text() { return std::strerror(errno); }

} // namespace

ExternalEvaluator::ExternalEvaluator(ExternalConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.command.empty())
    throw ConfigError("evaluator/external/command", "command must not be empty");
  spawn();
  try {
    protocol::check_ready(round_trip(protocol::hello_line()));
  } catch (...) {
    terminate();
    throw;
  }
}

ExternalEvaluator::~ExternalEvaluator() { terminate(); }

void ExternalEvaluator::spawn() {
  std::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0 || ::pipe2(out_pipe, O_CLOEXEC) != 0)
    throw EvaluatorFailure("pipe: " + errno_text());

  std::vector<std::string> env_strings;
  if (cfg_.inherit_env) {
    for (char **e = environ; *e != nullptr; ++e) {
      std::string entry(*e);
      auto eq = entry.find('=');
      if (eq != std::string::npos && cfg_.env.count(entry.substr(0, eq)))
        continue;
      env_strings.push_back(std::move(entry));
    }
  }
  for (const auto &[k, v] : cfg_.env)
    env_strings.push_back(k + "=" + v);

  std::vector<char *> argv;
  for (auto &arg : cfg_.command)
    argv.push_back(arg.data());
  argv.push_back(nullptr);
  std::vector<char *> envp;
  for (auto &e : env_strings)
    envp.push_back(e.data());
  envp.push_back(nullptr);

  pid_ = ::fork();
  if (pid_ < 0)
    throw EvaluatorFailure("fork: " + errno_text());
  if (pid_ == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::execvpe(argv[0], argv.data(), envp.data());
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

void ExternalEvaluator::write_line(const std::string &line) {
  std::string data = line + "\n";
  const char *p = data.data();
  std::size_t left = data.size();
  while (left > 0) {
    const auto n = ::write(to_child_, p, left);
    if (n < 0) {
      if (errno == EINTR)
        continue;
      throw ChildExited("evaluator child closed its input: " + errno_text(), line);
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
}

std::string ExternalEvaluator::read_line(const std::string &pending_request) {
  const auto deadline = std::chrono::steady_clock::now() + cfg_.timeout;
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r')
        line.pop_back();
      return line;
    }
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      throw EvalTimeout("no response within " + std::to_string(cfg_.timeout.count()) +
                            " ms to request " + pending_request,
                        buffer_);
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (ready < 0) {
      if (errno == EINTR)
        continue;
      throw EvaluatorFailure("poll: " + errno_text());
    }
    if (ready == 0)
      continue;
    char chunk[4096];
    const auto n = ::read(from_child_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR)
        continue;
      throw EvaluatorFailure("read: " + errno_text());
    }
    if (n == 0) {
      throw ChildExited("evaluator child closed its output while handling " +
                            pending_request,
                        buffer_);
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::string ExternalEvaluator::round_trip(const std::string &line) {
  write_line(line);
  return read_line(line);
}

EvalResult ExternalEvaluator::evaluate(const Candidate &cand) {
  const auto id = next_id_++;
  const auto reply = round_trip(protocol::encode_request(id, cand));
  return protocol::decode_response(reply, id);
}

nlohmann::json ExternalEvaluator::describe() const {
  return nlohmann::json{{"type", "external"},
                        {"command", cfg_.command},
                        {"timeout_ms", cfg_.timeout.count()}};
}

void ExternalEvaluator::terminate() {
  if (to_child_ >= 0) {
    ::close(to_child_);
    to_child_ = -1;
  }
  if (pid_ > 0) {
    // Give the child a moment to exit on EOF before killing it.
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        break;
      }
      ::usleep(10'000);
    }
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }
  if (from_child_ >= 0) {
    ::close(from_child_);
    from_child_ = -1;
  }
}

} // namespace hhnas
