#pragma once

// Running git and segmenting the `git log -p` text stream into commits.

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tdclean/corpus.hpp"
#include "tdclean/error.hpp"
#include "tdclean/text.hpp"

namespace tdclean::git {

// A `git` child process whose stdout is read line by line.
class Process {
 public:
  Process(const std::vector<std::string>& args, bool quiet_stderr = false) {
    int fds[2];
    if (::pipe(fds) != 0) throw IoFailure(std::string("pipe: ") + std::strerror(errno));
    pid_ = ::fork();
    if (pid_ < 0) {
      ::close(fds[0]);
      ::close(fds[1]);
      throw IoFailure(std::string("fork: ") + std::strerror(errno));
    }
    if (pid_ == 0) {
      ::dup2(fds[1], STDOUT_FILENO);
      ::close(fds[0]);
      ::close(fds[1]);
      if (quiet_stderr) {
        if (FILE* devnull = std::fopen("/dev/null", "w")) ::dup2(fileno(devnull), STDERR_FILENO);
      }
      std::vector<char*> argv;
      argv.push_back(const_cast<char*>("git"));
      for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
      argv.push_back(nullptr);
      ::execvp("git", argv.data());
      ::_exit(127);
    }
    ::close(fds[1]);
    out_ = ::fdopen(fds[0], "r");
  }

  Process(const Process&) = delete;
  Process& operator=(const Process&) = delete;

  ~Process() {
    if (out_) std::fclose(out_);
    if (pid_ > 0 && !waited_) {
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
  }

  // Next line without its trailing newline; false at end of output.
  bool getline(std::string& line) {
    line.clear();
    if (!out_) return false;
    char* buf = nullptr;
    std::size_t cap = 0;
    const ssize_t n = ::getline(&buf, &cap, out_);
    if (n < 0) {
      std::free(buf);
      return false;
    }
    line.assign(buf, static_cast<std::size_t>(n));
    std::free(buf);
    if (!line.empty() && line.back() == '\n') line.pop_back();
    return true;
  }

  std::string read_all() {
    std::string all;
    char buf[1 << 14];
    std::size_t n;
    while (out_ && (n = std::fread(buf, 1, sizeof buf, out_)) > 0) all.append(buf, n);
    return all;
  }

  int wait() {
    if (out_) {
      std::fclose(out_);
      out_ = nullptr;
    }
    int status = 0;
    ::waitpid(pid_, &status, 0);
    waited_ = true;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

 private:
  pid_t pid_ = -1;
  FILE* out_ = nullptr;
  bool waited_ = false;
};

struct Output {
  int status = 0;
  std::string out;
};

inline Output run(const std::vector<std::string>& args, bool quiet_stderr = true) {
  Process p(args, quiet_stderr);
  Output o;
  o.out = p.read_all();
  o.status = p.wait();
  return o;
}

inline void ensure_available() {
  if (run({"--version"}).status != 0) throw GitUnavailable("git was not found on the PATH");
}

inline void ensure_repository(const std::string& repo) {
  ensure_available();
  if (!std::filesystem::is_directory(repo) || run({"-C", repo, "rev-parse", "--git-dir"}).status != 0) {
    throw NotARepository(repo);
  }
}

inline bool has_head(const std::string& repo) {
  return run({"-C", repo, "rev-parse", "--verify", "--quiet", "HEAD"}).status == 0;
}

// Content of `path` at HEAD, or nullopt when HEAD has no such file.
inline std::optional<std::string> show_at_head(const std::string& repo, const std::string& path) {
  auto o = run({"-C", repo, "show", "HEAD:" + path});
  if (o.status != 0) return std::nullopt;
  return o.out;
}

inline std::vector<std::string> log_arguments(const std::string& repo) {
  return {"-C", repo, "-c", "core.quotepath=off", "log", "-p", "--no-color", "--no-renames", "-U3",
          "--pretty=medium", "--no-decorate", "--no-abbrev-commit", "--no-ext-diff"};
}

inline bool is_commit_line(std::string_view line) {
  if (!text::starts_with(line, "commit ") || line.size() < 7 + 40) return false;
  for (std::size_t i = 7; i < 47; ++i) {
    if (!text::is_lower_hex(line[i])) return false;
  }
  return line.size() == 47 || line[47] == ' ';
}

// Splits the medium-format `git log -p` stream into commits:
//   commit <sha> / header lines / blank / 4-space indented message /
//   blank / "diff --git" sections.
class LogStreamParser {
 public:
  explicit LogStreamParser(std::string repo) : repo_(std::move(repo)) {}

  // Feeds one line; returns the previous commit when `line` starts a new one.
  std::optional<RawCommit> feed(std::string_view line) {
    if (is_commit_line(line)) {
      auto done = finish();
      current_ = RawCommit{std::string(line.substr(7, 40)), {}, {}, repo_};
      state_ = State::Header;
      return done;
    }
    if (!current_) return std::nullopt;
    switch (state_) {
      case State::Header:
        if (line.empty()) state_ = State::Message;
        break;
      case State::Message:
        if (text::starts_with(line, "    ")) {
          message_lines_.emplace_back(line.substr(4));
        } else if (line.empty()) {
          message_lines_.emplace_back();
        } else {
          state_ = State::Diff;
          append_diff(line);
        }
        break;
      case State::Diff:
        append_diff(line);
        break;
    }
    return std::nullopt;
  }

  std::optional<RawCommit> finish() {
    if (!current_) return std::nullopt;
    RawCommit c = std::move(*current_);
    current_.reset();
    while (!message_lines_.empty() && message_lines_.back().empty()) message_lines_.pop_back();
    for (std::size_t i = 0; i < message_lines_.size(); ++i) {
      if (i) c.message.push_back('\n');
      c.message += message_lines_[i];
    }
    message_lines_.clear();
    while (text::ends_with(diff_, "\n\n")) diff_.pop_back();
    c.diff_text = std::move(diff_);
    diff_.clear();
    return c;
  }

 private:
  enum class State { Header, Message, Diff };

  void append_diff(std::string_view line) {
    diff_ += line;
    diff_.push_back('\n');
  }

  std::string repo_;
  std::optional<RawCommit> current_;
  State state_ = State::Header;
  std::vector<std::string> message_lines_;
  std::string diff_;
};

inline std::string repo_name(const std::string& repo_path) {
  auto p = std::filesystem::weakly_canonical(std::filesystem::absolute(repo_path));
  auto name = p.filename().string();
  return name.empty() ? p.string() : name;
}

// Streams every commit of `repo` (newest first) to `on_commit`. Returns
// the number of commits seen.
inline std::size_t for_each_commit(const std::string& repo, const std::function<void(RawCommit&&)>& on_commit) {
  ensure_repository(repo);
  if (!has_head(repo)) return 0;
  Process proc(log_arguments(repo));
  LogStreamParser parser(repo_name(repo));
  std::size_t count = 0;
  std::string line;
  while (proc.getline(line)) {
    if (auto c = parser.feed(line)) {
      ++count;
      on_commit(std::move(*c));
    }
  }
  if (auto c = parser.finish()) {
    ++count;
    on_commit(std::move(*c));
  }
  if (proc.wait() != 0) throw Error("GitFailure", "git log failed in " + repo);
  return count;
}

struct MineResult {
  std::size_t commits = 0;
  std::size_t skipped = 0;  // diffs that failed to parse
};

// Writes every commit of `repo` to `out_path` as one record per line.
// Commits whose diff does not parse are reported on `log` and skipped.
inline MineResult mine(const std::string& repo, const std::string& out_path, std::ostream& log = std::cerr) {
  ensure_repository(repo);
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open " + out_path + " for writing");
  MineResult r;
  for_each_commit(repo, [&](RawCommit&& c) {
    try {
      parse_unified_diff(c.diff_text);
    } catch (const MalformedDiff& e) {
      log << "warning: skipping commit " << c.commit_id << ": " << e.what() << "\n";
      ++r.skipped;
      return;
    }
    out << to_record(c) << '\n';
    ++r.commits;
  });
  if (!out.flush()) throw IoFailure("write to " + out_path + " failed");
  return r;
}

}  // namespace tdclean::git
