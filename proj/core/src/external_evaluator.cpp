#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstring>
#include <fstream>

#include "minishrink/evaluation.hpp"
#include "text_util.hpp"

namespace minishrink {

namespace {

std::atomic<std::uint64_t> cfg_counter{0};

std::filesystem::path write_cfg_file(const FeatureModel& model, const Configuration& config) {
  auto path = std::filesystem::temp_directory_path() /
              ("minishrink-" + std::to_string(::getpid()) + "-" +
               std::to_string(cfg_counter.fetch_add(1)) + ".cfg");
  std::ofstream out(path);
  if (!out) throw EvaluatorError("cannot write cfg file " + path.string());
  for (std::size_t i = 0; i < config.size(); ++i) {
    if (!config.test(i)) continue;
    const Feature& f = model.features()[i];
    out << f.name << ':' << f.modified_value.to_string() << '\n';
  }
  out.close();
  if (!out) throw EvaluatorError("cannot write cfg file " + path.string());
  return path;
}

struct ChildResult {
  int exit_code = -1;
  std::string stdout_text;
};

ChildResult run_child(const std::vector<std::string>& argv, std::chrono::seconds timeout) {
  int fds[2];
  if (::pipe(fds) != 0) throw EvaluatorError("pipe() failed");

  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw EvaluatorError("fork() failed");
  }
  if (pid == 0) {
    ::dup2(fds[1], STDOUT_FILENO);
    ::close(fds[0]);
    ::close(fds[1]);
    std::vector<char*> cargv;
    for (const std::string& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);
    ::execvp(cargv[0], cargv.data());
    _exit(127);
  }

  ::close(fds[1]);
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  auto remaining_ms = [&] {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    return static_cast<int>(std::max<long long>(0, left.count()));
  };

  ChildResult result;
  bool timed_out = false;
  char buf[4096];
  while (true) {
    struct pollfd pfd{fds[0], POLLIN, 0};
    const int rc = ::poll(&pfd, 1, std::max(1, remaining_ms()));
    if (rc == 0 && remaining_ms() == 0) {
      timed_out = true;
      break;
    }
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (rc == 0) continue;
    const ssize_t got = ::read(fds[0], buf, sizeof(buf));
    if (got < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (got == 0) break;  // EOF
    result.stdout_text.append(buf, static_cast<std::size_t>(got));
  }
  ::close(fds[0]);

  if (timed_out) {
    ::kill(pid, SIGKILL);
    ::waitpid(pid, nullptr, 0);
    throw EvaluatorError("evaluator command timed out after " +
                         std::to_string(timeout.count()) + " s");
  }

  // the child closed stdout; give it until the deadline to actually exit
  int status = 0;
  while (true) {
    const pid_t done = ::waitpid(pid, &status, WNOHANG);
    if (done == pid) break;
    if (done < 0) throw EvaluatorError("waitpid() failed");
    if (remaining_ms() == 0) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, nullptr, 0);
      throw EvaluatorError("evaluator command timed out after " +
                           std::to_string(timeout.count()) + " s");
    }
    ::usleep(2000);
  }
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    throw EvaluatorError("evaluator command killed by signal " +
                         std::to_string(WTERMSIG(status)));
  }
  return result;
}

}  // namespace

ExternalEvaluator::ExternalEvaluator(const FeatureModel& model, std::string command, Options opt)
    : model_(&model), opt_(opt) {
  for (auto& tok : text::split_ws(command)) argv_.push_back(std::move(tok));
  if (argv_.empty()) throw ValidationError("external evaluator: empty command");
  if (opt_.runs < 1) throw ValidationError("external evaluator: runs must be >= 1");
}

ExternalEvaluator::ExternalEvaluator(const FeatureModel& model, std::string command)
    : ExternalEvaluator(model, std::move(command), Options{}) {}

Measurement ExternalEvaluator::measure(const Configuration& config, const AppSpec& app) {
  const auto cfg_path = write_cfg_file(*model_, config);
  std::vector<std::string> argv = argv_;
  argv.push_back(cfg_path.string());
  argv.push_back(app.name);
  argv.push_back(std::to_string(opt_.runs));

  ChildResult child;
  try {
    child = run_child(argv, opt_.timeout);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(cfg_path, ec);
    throw;
  }
  std::error_code ec;
  std::filesystem::remove(cfg_path, ec);

  if (child.exit_code == 2) return Measurement::failed();
  if (child.exit_code != 0)
    throw EvaluatorError("evaluator command '" + argv_[0] + "' exited with code " +
                         std::to_string(child.exit_code));

  std::vector<std::vector<std::string>> lines;
  for (const std::string& raw : text::split(child.stdout_text, '\n')) {
    auto tokens = text::split_ws(raw);
    if (!tokens.empty()) lines.push_back(std::move(tokens));
  }
  if (lines.size() != static_cast<std::size_t>(opt_.runs))
    throw EvaluatorError("evaluator printed " + std::to_string(lines.size()) +
                         " result lines, expected " + std::to_string(opt_.runs));

  std::vector<double> mu_kb, et_s;
  double cs_kb = 0;
  try {
    for (std::size_t r = 0; r < lines.size(); ++r) {
      if (lines[r].size() != 3)
        throw ParseError("result line needs 'CS_BYTES MU_BYTES ET_SECONDS'");
      if (r == 0)  // code size does not change between runs; first line wins
        cs_kb = text::parse_number(lines[r][0], "code size") / 1000.0;
      mu_kb.push_back(text::parse_number(lines[r][1], "memory") / 1000.0);
      et_s.push_back(text::parse_number(lines[r][2], "time"));
    }
  } catch (const ParseError& e) {
    throw EvaluatorError(std::string("bad evaluator output: ") + e.what());
  }

  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v.size() % 2 ? v[v.size() / 2] : (v[v.size() / 2 - 1] + v[v.size() / 2]) / 2.0;
  };
  return Measurement::of(cs_kb, median(std::move(mu_kb)), median(std::move(et_s)));
}

}  // namespace minishrink
