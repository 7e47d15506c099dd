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

// The assistant server: Beaver triples, matrix triples and exponentiation
// masks, served to the computing servers over a channel or replayed from a
// file.
//
// Request  (S_j -> T): tag kOfflineRequestTag, payload [kind, seq, d0, d1, d2]
// Response (T -> S_j): tag kOfflineResponseTag, payload [kind, seq, d0, d1, d2, elements...]
//
// The dimensions are public shapes; T never sees a payload derived from the
// inputs.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "ppgpr/analysis.hpp"
#include "ppgpr/errors.hpp"
#include "ppgpr/params.hpp"
#include "ppgpr/random.hpp"
#include "ppgpr/ring.hpp"
#include "ppgpr/sharing.hpp"
#include "ppgpr/transport.hpp"

namespace ppgpr {

inline constexpr std::uint64_t kOfflineRequestTag = 0x4f46464c52455155ULL;   // "OFFLREQU"
inline constexpr std::uint64_t kOfflineResponseTag = 0x4f46464c52455350ULL;  // "OFFLRESP"

enum class MaterialKind : std::uint64_t { kDone = 0, kBeaver = 1, kMatrixTriple = 2, kExpMask = 3 };

inline const char* material_name(MaterialKind k) {
  switch (k) {
    case MaterialKind::kDone: return "done";
    case MaterialKind::kBeaver: return "beaver";
    case MaterialKind::kMatrixTriple: return "matrix-triple";
    case MaterialKind::kExpMask: return "exp-mask";
  }
  return "unknown";
}

struct MaterialRequest {
  MaterialKind kind = MaterialKind::kDone;
  std::uint64_t seq = 0;
  std::array<std::uint64_t, 3> dims{};

  friend bool operator==(const MaterialRequest&, const MaterialRequest&) = default;

  std::vector<std::uint64_t> words() const {
    return {static_cast<std::uint64_t>(kind), seq, dims[0], dims[1], dims[2]};
  }
  static MaterialRequest parse(std::span<const std::uint64_t> w) {
    if (w.size() < 5) throw ProtocolError("offline request too short");
    if (w[0] > 3) throw ProtocolError("unknown offline material kind");
    return {static_cast<MaterialKind>(w[0]), w[1], {w[2], w[3], w[4]}};
  }
  std::string describe() const {
    return std::string(material_name(kind)) + "#" + std::to_string(seq) + " [" +
           std::to_string(dims[0]) + "," + std::to_string(dims[1]) + "," + std::to_string(dims[2]) +
           "]";
  }
};

// One party's share of `count` scalar triples.
struct TripleBatch {
  std::uint64_t seq = 0;
  int party = 0;
  std::vector<Word> a, b, c;
  std::size_t size() const { return a.size(); }
};

struct MatrixTriple {
  std::uint64_t seq = 0;
  SharedMatrix A, B, C;
};

// Shares of r = encode(r_check) and of e^{-r_check} at the mask scale.
struct ExpMaskBatch {
  std::uint64_t seq = 0;
  int party = 0;
  std::vector<Word> r, emr;
  std::size_t size() const { return r.size(); }
};

// ---- generation ------------------------------------------------------------

class Dealer {
 public:
  Dealer(FixedPointCodec codec, ExpParams exp, std::uint64_t seed)
      : codec_(codec), exp_(exp), rng_(seed, "ppgpr-dealer") {
    require_valid_exp_params(exp_, codec_.params());
    mask_bits_ = exp_.resolve(codec_.params()).mask_bits;
    r_grid_ = static_cast<SignedWord>(
        std::floor(static_cast<long double>(exp_.r_max) * std::ldexp(1.0L, codec_.frac_bits())));
    if (r_grid_ <= 0) throw ConfigError("r_max is below one fixed-point step");
  }

  const FixedPointCodec& codec() const { return codec_; }
  const ExpParams& exp_params() const { return exp_; }

  std::pair<TripleBatch, TripleBatch> gen_beaver(std::size_t count, std::uint64_t seq = 0) {
    const auto& p = codec_.params();
    TripleBatch t0{seq, 0, {}, {}, {}}, t1{seq, 1, {}, {}, {}};
    for (auto* t : {&t0, &t1}) {
      t->a.resize(count);
      t->b.resize(count);
      t->c.resize(count);
    }
    for (std::size_t i = 0; i < count; ++i) {
      const Word a = rng_.next_element(p), b = rng_.next_element(p);
      const Word c = ring_mul(p, a, b);
      split(a, t0.a[i], t1.a[i]);
      split(b, t0.b[i], t1.b[i]);
      split(c, t0.c[i], t1.c[i]);
    }
    return {std::move(t0), std::move(t1)};
  }

  std::pair<MatrixTriple, MatrixTriple> gen_matrix_triple(std::size_t m, std::size_t n,
                                                          std::size_t k, std::uint64_t seq = 0) {
    if (m == 0 || n == 0 || k == 0) {
      throw std::invalid_argument("matrix triple dimensions must be positive");
    }
    const auto& p = codec_.params();
    SharedMatrix A(-1, m, n), B(-1, n, k), C(-1, m, k);
    for (auto& v : A.values) v = rng_.next_element(p);
    for (auto& v : B.values) v = rng_.next_element(p);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t t = 0; t < n; ++t) {
        const Word a = A(i, t);
        for (std::size_t j = 0; j < k; ++j) C(i, j) += a * B(t, j);
      }
    for (auto& v : C.values) v = p.wrap(v);
    MatrixTriple t0{seq, {}, {}, {}}, t1{seq, {}, {}, {}};
    split_matrix(A, t0.A, t1.A);
    split_matrix(B, t0.B, t1.B);
    split_matrix(C, t0.C, t1.C);
    return {std::move(t0), std::move(t1)};
  }

  std::pair<ExpMaskBatch, ExpMaskBatch> gen_exp_mask(std::size_t count, std::uint64_t seq = 0) {
    std::vector<SignedWord> grid(count);
    for (auto& g : grid) {
      g = static_cast<SignedWord>(rng_.uniform_below(static_cast<Word>(2 * r_grid_))) - r_grid_;
    }
    return masks_from_grid(grid, seq);
  }

  // Masks for caller-chosen r_check values (rounded onto the grid).
  std::pair<ExpMaskBatch, ExpMaskBatch> gen_exp_mask_explicit(std::span<const long double> r_check,
                                                              std::uint64_t seq = 0) {
    std::vector<SignedWord> grid(r_check.size());
    for (std::size_t i = 0; i < r_check.size(); ++i) {
      grid[i] = static_cast<SignedWord>(
          std::llroundl(r_check[i] * std::ldexp(1.0L, codec_.frac_bits())));
    }
    return masks_from_grid(grid, seq);
  }

  int mask_bits() const { return mask_bits_; }
  SignedWord r_grid_half_width() const { return r_grid_; }

 private:
  std::pair<ExpMaskBatch, ExpMaskBatch> masks_from_grid(const std::vector<SignedWord>& grid,
                                                        std::uint64_t seq) {
    const auto& p = codec_.params();
    ExpMaskBatch m0{seq, 0, {}, {}}, m1{seq, 1, {}, {}};
    for (auto* m : {&m0, &m1}) {
      m->r.resize(grid.size());
      m->emr.resize(grid.size());
    }
    const long double step = std::ldexp(1.0L, -codec_.frac_bits());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const long double r_check = static_cast<long double>(grid[i]) * step;
      const Word r = from_signed(p, grid[i]);
      const Word emr = codec_.encode_at(std::exp(-r_check), mask_bits_);
      split(r, m0.r[i], m1.r[i]);
      split(emr, m0.emr[i], m1.emr[i]);
    }
    return {std::move(m0), std::move(m1)};
  }

  void split(Word x, Word& s0, Word& s1) {
    const auto& p = codec_.params();
    s0 = rng_.next_element(p);
    s1 = ring_sub(p, x, s0);
  }

  void split_matrix(const SharedMatrix& x, SharedMatrix& s0, SharedMatrix& s1) {
    s0 = SharedMatrix(0, x.rows, x.cols);
    s1 = SharedMatrix(1, x.rows, x.cols);
    for (std::size_t k = 0; k < x.size(); ++k) split(x.values[k], s0.values[k], s1.values[k]);
  }

  FixedPointCodec codec_;
  ExpParams exp_;
  Prg rng_;
  int mask_bits_ = 0;
  SignedWord r_grid_ = 0;
};

// ---- encoding of responses -------------------------------------------------

namespace detail {

inline Message encode_triples(const RingParams& p, const MaterialRequest& rq, const TripleBatch& t) {
  Message m{kOfflineResponseTag, rq.words()};
  put_elements(p, t.a, m.payload);
  put_elements(p, t.b, m.payload);
  put_elements(p, t.c, m.payload);
  return m;
}

inline Message encode_matrix_triple(const RingParams& p, const MaterialRequest& rq,
                                    const MatrixTriple& t) {
  Message m{kOfflineResponseTag, rq.words()};
  put_elements(p, t.A.values, m.payload);
  put_elements(p, t.B.values, m.payload);
  put_elements(p, t.C.values, m.payload);
  return m;
}

inline Message encode_masks(const RingParams& p, const MaterialRequest& rq, const ExpMaskBatch& e) {
  Message m{kOfflineResponseTag, rq.words()};
  put_elements(p, e.r, m.payload);
  put_elements(p, e.emr, m.payload);
  return m;
}

// Checks a response against the request it answers and returns the element
// words that follow the header.
inline std::span<const std::uint64_t> check_response(const Message& m, const MaterialRequest& rq,
                                                     std::size_t elements, const RingParams& p) {
  if (m.tag != kOfflineResponseTag) throw ProtocolError("unexpected tag on offline channel");
  const auto got = MaterialRequest::parse(m.payload);
  if (!(got == rq)) {
    throw ProtocolError("offline material mismatch: wanted " + rq.describe() + ", got " +
                        got.describe());
  }
  const std::size_t need = 5 + elements * static_cast<std::size_t>(p.words_per_element());
  if (m.payload.size() != need) throw ProtocolError("offline response has wrong length");
  return std::span<const std::uint64_t>(m.payload).subspan(5);
}

inline TripleBatch decode_triples(const RingParams& p, int party, const MaterialRequest& rq,
                                  const Message& m) {
  const std::size_t n = rq.dims[0];
  auto w = check_response(m, rq, 3 * n, p);
  const std::size_t stride = n * static_cast<std::size_t>(p.words_per_element());
  return {rq.seq, party, get_elements(p, w, n), get_elements(p, w.subspan(stride), n),
          get_elements(p, w.subspan(2 * stride), n)};
}

inline MatrixTriple decode_matrix_triple(const RingParams& p, int party, const MaterialRequest& rq,
                                         const Message& m) {
  const std::size_t r = rq.dims[0], n = rq.dims[1], k = rq.dims[2];
  auto w = check_response(m, rq, r * n + n * k + r * k, p);
  const std::size_t wpe = static_cast<std::size_t>(p.words_per_element());
  MatrixTriple t;
  t.seq = rq.seq;
  t.A = SharedMatrix(party, r, n, get_elements(p, w, r * n));
  t.B = SharedMatrix(party, n, k, get_elements(p, w.subspan(r * n * wpe), n * k));
  t.C = SharedMatrix(party, r, k, get_elements(p, w.subspan((r * n + n * k) * wpe), r * k));
  return t;
}

inline ExpMaskBatch decode_masks(const RingParams& p, int party, const MaterialRequest& rq,
                                 const Message& m) {
  const std::size_t n = rq.dims[0];
  auto w = check_response(m, rq, 2 * n, p);
  const std::size_t stride = n * static_cast<std::size_t>(p.words_per_element());
  return {rq.seq, party, get_elements(p, w, n), get_elements(p, w.subspan(stride), n)};
}

}  // namespace detail

// ---- sources ---------------------------------------------------------------

struct OfflineTraffic {
  std::uint64_t messages = 0;
  std::uint64_t bytes_received = 0;
  std::uint64_t bytes_sent = 0;
};

// Where a computing server obtains its offline material. Requests are
// numbered by the caller; every request is answered exactly once.
class OfflineSource {
 public:
  OfflineSource(RingParams ring, int party) : ring_(ring), party_(party) {}
  virtual ~OfflineSource() = default;

  TripleBatch beaver(std::size_t count) {
    MaterialRequest rq{MaterialKind::kBeaver, next_seq_++, {count, 0, 0}};
    return detail::decode_triples(ring_, party_, rq, fetch(rq));
  }
  MatrixTriple matrix_triple(std::size_t m, std::size_t n, std::size_t k) {
    if (m == 0 || n == 0 || k == 0) {
      throw std::invalid_argument("matrix triple dimensions must be positive");
    }
    MaterialRequest rq{MaterialKind::kMatrixTriple, next_seq_++, {m, n, k}};
    return detail::decode_matrix_triple(ring_, party_, rq, fetch(rq));
  }
  ExpMaskBatch exp_mask(std::size_t count) {
    MaterialRequest rq{MaterialKind::kExpMask, next_seq_++, {count, 0, 0}};
    return detail::decode_masks(ring_, party_, rq, fetch(rq));
  }

  // Tells the provider that no more material is needed.
  virtual void finish() {}

  const OfflineTraffic& traffic() const { return traffic_; }
  int party() const { return party_; }

  // Invoked with every response message, e.g. to persist it.
  void set_observer(std::function<void(const Message&)> f) { observer_ = std::move(f); }

 protected:
  virtual Message fetch_raw(const MaterialRequest& rq) = 0;

  Message fetch(const MaterialRequest& rq) {
    Message m = fetch_raw(rq);
    ++traffic_.messages;
    traffic_.bytes_received += wire_bytes(m);
    if (observer_) observer_(m);
    return m;
  }

  RingParams ring_;
  int party_;
  OfflineTraffic traffic_;

 private:
  std::uint64_t next_seq_ = 0;
  std::function<void(const Message&)> observer_;
};

using OfflineSourcePtr = std::unique_ptr<OfflineSource>;

// Asks the assistant over a channel.
class DealerClient final : public OfflineSource {
 public:
  DealerClient(RingParams ring, int party, ChannelPtr to_dealer)
      : OfflineSource(ring, party), ch_(std::move(to_dealer)) {}

  void finish() override {
    if (finished_) return;
    finished_ = true;
    Message done{kOfflineRequestTag, MaterialRequest{}.words()};
    traffic_.bytes_sent += wire_bytes(done);
    ch_->send(std::move(done));
  }

 protected:
  Message fetch_raw(const MaterialRequest& rq) override {
    Message req{kOfflineRequestTag, rq.words()};
    traffic_.bytes_sent += wire_bytes(req);
    ch_->send(std::move(req));
    return ch_->recv();
  }

 private:
  ChannelPtr ch_;
  bool finished_ = false;
};

// The assistant's serving loop. Both computing servers issue identical
// request sequences; each request is answered with fresh material once both
// have asked for it.
class DealerServer {
 public:
  DealerServer(Dealer dealer, ChannelPtr to_s0, ChannelPtr to_s1)
      : dealer_(std::move(dealer)), ch_{std::move(to_s0), std::move(to_s1)} {}

  void serve() {
    const auto& p = dealer_.codec().params();
    for (;;) {
      Message m0 = ch_[0]->recv();
      Message m1 = ch_[1]->recv();
      if (m0.tag != kOfflineRequestTag || m1.tag != kOfflineRequestTag) {
        throw ProtocolError("assistant received a non-request message");
      }
      const auto r0 = MaterialRequest::parse(m0.payload);
      const auto r1 = MaterialRequest::parse(m1.payload);
      if (!(r0 == r1)) {
        throw ProtocolError("computing servers requested different material: " + r0.describe() +
                            " vs " + r1.describe());
      }
      if (r0.kind == MaterialKind::kDone) return;
      ++served_;
      switch (r0.kind) {
        case MaterialKind::kBeaver: {
          auto [t0, t1] = dealer_.gen_beaver(r0.dims[0], r0.seq);
          ch_[0]->send(detail::encode_triples(p, r0, t0));
          ch_[1]->send(detail::encode_triples(p, r0, t1));
          break;
        }
        case MaterialKind::kMatrixTriple: {
          auto [t0, t1] = dealer_.gen_matrix_triple(r0.dims[0], r0.dims[1], r0.dims[2], r0.seq);
          ch_[0]->send(detail::encode_matrix_triple(p, r0, t0));
          ch_[1]->send(detail::encode_matrix_triple(p, r0, t1));
          break;
        }
        case MaterialKind::kExpMask: {
          auto [e0, e1] = dealer_.gen_exp_mask(r0.dims[0], r0.seq);
          ch_[0]->send(detail::encode_masks(p, r0, e0));
          ch_[1]->send(detail::encode_masks(p, r0, e1));
          break;
        }
        case MaterialKind::kDone: break;
      }
    }
  }

  std::uint64_t requests_served() const { return served_; }

 private:
  Dealer dealer_;
  std::array<ChannelPtr, 2> ch_;
  std::uint64_t served_ = 0;
};

// ---- persistence -----------------------------------------------------------
//
// A material file is a concatenation of response messages in wire format,
// one file per computing server.

class MaterialFileWriter {
 public:
  explicit MaterialFileWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
  }
  void write(const Message& m) {
    std::lock_guard lk(mu_);
    const auto bytes = encode_message(m);
    out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out_) throw std::runtime_error("write to material file failed");
  }
  void flush() { out_.flush(); }

 private:
  std::mutex mu_;
  std::ofstream out_;
};

// Replays a material file. Running past its end is an underrun.
class FileSource final : public OfflineSource {
 public:
  FileSource(RingParams ring, int party, const std::string& path)
      : OfflineSource(ring, party), in_(path, std::ios::binary) {
    if (!in_) throw std::runtime_error("cannot open material file " + path);
  }

 protected:
  Message fetch_raw(const MaterialRequest& rq) override {
    unsigned char header[kHeaderBytes];
    in_.read(reinterpret_cast<char*>(header), sizeof header);
    if (in_.gcount() == 0) {
      throw OfflineUnderrun("offline material exhausted at " + rq.describe());
    }
    if (in_.gcount() != static_cast<std::streamsize>(sizeof header)) {
      throw ProtocolError("truncated material file");
    }
    Message m;
    m.tag = get_u64_le(header);
    const std::uint64_t n = get_u64_le(header + 8);
    std::vector<unsigned char> body(8 * n);
    in_.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(body.size()));
    if (in_.gcount() != static_cast<std::streamsize>(body.size())) {
      throw ProtocolError("truncated material file");
    }
    m.payload.resize(n);
    for (std::size_t i = 0; i < n; ++i) m.payload[i] = get_u64_le(body.data() + 8 * i);
    return m;
  }

 private:
  std::ifstream in_;
};

// Serves material from an in-memory list of responses.
class PoolSource final : public OfflineSource {
 public:
  PoolSource(RingParams ring, int party, std::vector<Message> pool)
      : OfflineSource(ring, party), pool_(std::move(pool)) {}

 protected:
  Message fetch_raw(const MaterialRequest& rq) override {
    if (next_ >= pool_.size()) {
      throw OfflineUnderrun("offline material exhausted at " + rq.describe());
    }
    return pool_[next_++];
  }

 private:
  std::vector<Message> pool_;
  std::size_t next_ = 0;
};

// Pre-generates the responses for a known request list, as the assistant
// would in an offline phase.
inline std::pair<std::vector<Message>, std::vector<Message>> pregenerate(
    Dealer& dealer, const std::vector<MaterialRequest>& requests) {
  const auto& p = dealer.codec().params();
  std::vector<Message> out0, out1;
  for (const auto& rq : requests) {
    switch (rq.kind) {
      case MaterialKind::kBeaver: {
        auto [a, b] = dealer.gen_beaver(rq.dims[0], rq.seq);
        out0.push_back(detail::encode_triples(p, rq, a));
        out1.push_back(detail::encode_triples(p, rq, b));
        break;
      }
      case MaterialKind::kMatrixTriple: {
        auto [a, b] = dealer.gen_matrix_triple(rq.dims[0], rq.dims[1], rq.dims[2], rq.seq);
        out0.push_back(detail::encode_matrix_triple(p, rq, a));
        out1.push_back(detail::encode_matrix_triple(p, rq, b));
        break;
      }
      case MaterialKind::kExpMask: {
        auto [a, b] = dealer.gen_exp_mask(rq.dims[0], rq.seq);
        out0.push_back(detail::encode_masks(p, rq, a));
        out1.push_back(detail::encode_masks(p, rq, b));
        break;
      }
      case MaterialKind::kDone: break;
    }
  }
  return {std::move(out0), std::move(out1)};
}

}  // namespace ppgpr
