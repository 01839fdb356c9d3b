// Copyright 2026 The shapeabs Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <stdexcept>

#include "json.hpp"
#include "shapeabs/wake.hpp"

namespace shapeabs {

SubprocessProposer::SubprocessProposer(std::vector<std::string> argv) {
  if (argv.empty()) throw std::invalid_argument("empty proposer command");
  int in[2], out[2];
  if (pipe(in) != 0 || pipe(out) != 0)
    throw std::runtime_error(std::string("pipe: ") + std::strerror(errno));
  const pid_t pid = fork();
  if (pid < 0) throw std::runtime_error(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    dup2(in[0], STDIN_FILENO);
    dup2(out[1], STDOUT_FILENO);
    close(in[0]);
    close(in[1]);
    close(out[0]);
    close(out[1]);
    std::vector<char*> args;
    for (auto& a : argv) args.push_back(a.data());
    args.push_back(nullptr);
    execvp(args[0], args.data());
    _exit(127);
  }
  close(in[0]);
  close(out[1]);
  pid_ = pid;
  to_child_ = in[1];
  from_child_ = out[0];
  signal(SIGPIPE, SIG_IGN);
}

SubprocessProposer::~SubprocessProposer() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    // give it a moment to exit on EOF, then insist
    for (int i = 0; i < 50; ++i) {
      if (waitpid(pid_, &status, WNOHANG) == pid_) return;
      usleep(10000);
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, &status, 0);
  }
}

std::string SubprocessProposer::roundtrip(const std::string& line) {
  std::string msg = line + "\n";
  std::size_t off = 0;
  while (off < msg.size()) {
    const ssize_t n = write(to_child_, msg.data() + off, msg.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error("proposer process closed its input");
    }
    off += static_cast<std::size_t>(n);
  }
  // Generous wall clock: the child gets its own budget in the request.
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);
  char buf[4096];
  while (true) {
    const auto nl = pending_.find('\n');
    if (nl != std::string::npos) {
      std::string out = pending_.substr(0, nl);
      pending_.erase(0, nl + 1);
      return out;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                          deadline - std::chrono::steady_clock::now())
                          .count();
    if (left <= 0) throw std::runtime_error("proposer process timed out");
    pollfd p{from_child_, POLLIN, 0};
    const int r = poll(&p, 1, static_cast<int>(left));
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) continue;
    const ssize_t n = read(from_child_, buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw std::runtime_error("proposer process exited");
    pending_.append(buf, static_cast<std::size_t>(n));
  }
}

std::vector<Expr> SubprocessProposer::propose(const std::vector<Primitive>& canvas,
                                              const Library& lib,
                                              const ProposerBudget& budget) {
  std::lock_guard<std::mutex> lock(mu_);
  nlohmann::json req;
  req["scene"] = nlohmann::json::array();
  for (const auto& p : canvas) req["scene"].push_back({p.w, p.h, p.x, p.y});
  req["batch"] = budget.batch;
  req["time_budget"] = budget.max_seconds;
  const std::string reply = roundtrip(req.dump());
  nlohmann::json res;
  try {
    res = nlohmann::json::parse(reply);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("bad proposer reply: ") + e.what());
  }
  if (res.contains("error"))
    throw std::runtime_error("proposer error: " + res["error"].dump());
  if (!res.contains("expressions") || !res["expressions"].is_array())
    throw std::runtime_error("proposer reply lacks expressions");
  std::vector<Expr> out;
  for (const auto& item : res["expressions"]) {
    if (!item.is_string()) {
      ++dropped_;
      continue;
    }
    try {
      out.push_back(parse(item.get<std::string>(), &lib));
    } catch (const DslError&) {
      ++dropped_;  // malformed or ill-typed; skip it
    }
  }
  return out;
}

}  // namespace shapeabs
