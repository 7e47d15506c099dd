// Copyright 2026 The ppgpr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Runs the two computing servers and the assistant as three threads, over
// in-process queues or loopback TCP sockets.

#pragma once

#include <array>
#include <chrono>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

#include "ppgpr/offline.hpp"
#include "ppgpr/party.hpp"
#include "ppgpr/transport.hpp"

namespace ppgpr {

enum class Backend { kInProc, kSockets };

struct SessionOptions {
  RingParams ring{};
  ProtocolConfig protocol{};
  std::uint64_t dealer_seed = 1;
  Backend backend = Backend::kInProc;
  std::string host = "127.0.0.1";
  int base_port = 0;  // 0 picks free ports
  bool record_transcripts = false;
  // When set, material is replayed from these files instead of the dealer.
  std::array<std::string, 2> offline_files{};
  // When set, every material response is also written to these files.
  std::array<std::string, 2> persist_files{};
  std::chrono::milliseconds timeout{std::chrono::minutes(10)};
};

template <class R>
struct SessionResult {
  std::array<R, 2> out;
  std::array<RoundStats, 2> stats;
  // Messages seen by S0 and S1 on their peer link.
  std::array<std::vector<TranscriptEntry>, 2> peer_transcripts;
  // Messages seen by T on its links to S0 and S1.
  std::array<std::vector<TranscriptEntry>, 2> dealer_transcripts;
  std::uint64_t dealer_requests = 0;
};

struct SessionFailure {
  std::string stage;  // protocol path active when the first error surfaced
  std::string party;
  std::string message;
};

inline std::optional<SessionFailure>& last_session_failure() {
  thread_local std::optional<SessionFailure> f;
  return f;
}

// Binds an ephemeral port and releases it.
inline int pick_free_port() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw TransportError("socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd);
    throw TransportError("bind() failed");
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

namespace detail {

class SessionState {
 public:
  void add_channel(ChannelPtr c) {
    std::lock_guard lk(mu_);
    channels_.push_back(std::move(c));
    if (failed_) channels_.back()->close();
  }

  void fail(std::exception_ptr e, std::string party, std::string stage) {
    std::lock_guard lk(mu_);
    if (!failed_) {
      failed_ = true;
      error_ = e;
      std::string msg;
      try {
        std::rethrow_exception(e);
      } catch (const std::exception& ex) {
        msg = ex.what();
      } catch (...) {
        msg = "unknown error";
      }
      failure_ = SessionFailure{std::move(stage), std::move(party), std::move(msg)};
    }
    for (auto& c : channels_) c->close();
  }

  std::exception_ptr error() const { return error_; }
  const std::optional<SessionFailure>& failure() const { return failure_; }

 private:
  std::mutex mu_;
  std::vector<ChannelPtr> channels_;
  bool failed_ = false;
  std::exception_ptr error_;
  std::optional<SessionFailure> failure_;
};

}  // namespace detail

// Runs `body(party)` on both computing servers. `body` must return a value.
template <class F>
auto run_session(const SessionOptions& opt, F&& body)
    -> SessionResult<std::invoke_result_t<F&, Party&>> {
  using R = std::invoke_result_t<F&, Party&>;
  static_assert(!std::is_void_v<R>, "session body must return a value");

  const FixedPointCodec codec(opt.ring);
  const bool use_dealer = opt.offline_files[0].empty();
  if (use_dealer) require_valid_exp_params(opt.protocol.exp, opt.ring);
  opt.protocol.division.validate();

  SessionResult<R> result;
  detail::SessionState state;
  std::array<std::shared_ptr<RecordingChannel>, 2> peer_rec{}, dealer_rec{};

  // Channel endpoints: peer link and dealer links.
  std::array<ChannelPtr, 2> peer{}, to_dealer{}, dealer_side{};
  std::array<int, 3> ports{};
  if (opt.backend == Backend::kInProc) {
    auto [a, b] = make_inproc_pair(opt.timeout);
    peer = {a, b};
    for (int j = 0; j < 2; ++j) {
      auto [c, d] = make_inproc_pair(opt.timeout);
      to_dealer[j] = c;
      dealer_side[j] = d;
    }
    for (auto* arr : {&peer, &to_dealer, &dealer_side})
      for (auto& c : *arr) state.add_channel(c);
  } else {
    for (int i = 0; i < 3; ++i) ports[i] = opt.base_port ? opt.base_port + i : pick_free_port();
  }

  auto wrap = [&](ChannelPtr c, std::shared_ptr<RecordingChannel>& slot) -> ChannelPtr {
    if (!opt.record_transcripts) return c;
    slot = std::make_shared<RecordingChannel>(std::move(c));
    return slot;
  };

  auto party_main = [&](int j) {
    // Declared outside the try block so the failing scope is still readable
    // in the handler.
    OfflineSourcePtr source;
    std::unique_ptr<MaterialFileWriter> writer;
    std::optional<Party> party;
    try {
      ChannelPtr link = peer[j], dl = to_dealer[j];
      if (opt.backend == Backend::kSockets) {
        if (j == 0) {
          link = TcpChannel::listen_once(opt.host, ports[0], opt.timeout);
        } else {
          link = TcpChannel::connect_to(opt.host, ports[0], opt.timeout);
        }
        state.add_channel(link);
        if (use_dealer) {
          dl = TcpChannel::connect_to(opt.host, ports[1 + j], opt.timeout);
          state.add_channel(dl);
        }
      }
      link = wrap(link, peer_rec[j]);

      if (use_dealer) {
        source = std::make_unique<DealerClient>(opt.ring, j, dl);
      } else {
        source = std::make_unique<FileSource>(opt.ring, j, opt.offline_files[j]);
      }
      if (!opt.persist_files[j].empty()) {
        writer = std::make_unique<MaterialFileWriter>(opt.persist_files[j]);
        source->set_observer([w = writer.get()](const Message& m) { w->write(m); });
      }

      party.emplace(j, codec, opt.protocol, link, *source);
      result.out[j] = body(*party);
      source->finish();
      result.stats[j] = party->stats();
      if (writer) writer->flush();
    } catch (...) {
      const std::string stage = party && !party->failure_scope().empty() ? party->failure_scope()
                                                                         : std::string("session");
      state.fail(std::current_exception(), role_name(static_cast<PartyRole>(j)), stage);
    }
  };

  auto dealer_main = [&] {
    try {
      std::array<ChannelPtr, 2> ch = dealer_side;
      if (opt.backend == Backend::kSockets) {
        for (int j = 0; j < 2; ++j) {
          ch[j] = TcpChannel::listen_once(opt.host, ports[1 + j], opt.timeout);
          state.add_channel(ch[j]);
        }
      }
      for (int j = 0; j < 2; ++j) ch[j] = wrap(ch[j], dealer_rec[j]);
      DealerServer server(Dealer(codec, opt.protocol.exp, opt.dealer_seed), ch[0], ch[1]);
      server.serve();
      result.dealer_requests = server.requests_served();
    } catch (...) {
      state.fail(std::current_exception(), "T", "offline");
    }
  };

  std::vector<std::thread> threads;
  if (use_dealer) threads.emplace_back(dealer_main);
  threads.emplace_back(party_main, 0);
  threads.emplace_back(party_main, 1);
  for (auto& t : threads) t.join();

  last_session_failure() = state.failure();
  if (state.error()) std::rethrow_exception(state.error());

  for (int j = 0; j < 2; ++j) {
    if (peer_rec[j]) result.peer_transcripts[j] = peer_rec[j]->transcript();
    if (dealer_rec[j]) result.dealer_transcripts[j] = dealer_rec[j]->transcript();
  }
  return result;
}

}  // namespace ppgpr
