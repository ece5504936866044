// Copyright 2026 The DPGAN Authors.
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

// Versioned binary checkpoints of a TrainerState. The byte layout is
// documented in docs/checkpoint_format.md; all integers and doubles are
// little-endian and the file ends with an FNV-1a checksum of everything
// before it.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "dpgan/error.hpp"
#include "dpgan/gan.hpp"

namespace dpgan {

inline constexpr char kCheckpointMagic[8] = {'D', 'P', 'G', 'A',
                                             'N', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace ckpt_internal {

inline std::uint64_t fnv1a(const unsigned char* p, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void vec(const Eigen::VectorXd& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
  }
  std::vector<unsigned char>& buffer() { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  Reader(const std::vector<unsigned char>& b, std::size_t end)
      : buf_(b), end_(end) {}

  std::size_t offset() const { return pos_; }

  void need(std::size_t n) {
    if (pos_ + n > end_) {
      throw IoError("truncated checkpoint", static_cast<std::int64_t>(pos_));
    }
  }
  std::uint8_t u8() {
    need(1);
    return buf_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{buf_[pos_++]} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{buf_[pos_++]} << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  bool flag() {
    const std::size_t at = pos_;
    const std::uint8_t v = u8();
    if (v > 1) fail("bad boolean flag", at);
    return v == 1;
  }
  std::uint64_t count(std::size_t elem_size) {
    const std::size_t at = pos_;
    const std::uint64_t n = u64();
    if (elem_size > 0 && n > (end_ - pos_) / elem_size) {
      fail("length field exceeds remaining data", at);
    }
    return n;
  }
  std::string str() {
    const std::uint64_t n = count(1);
    need(n);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  Eigen::VectorXd vec() {
    const std::uint64_t n = count(8);
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::uint64_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = f64();
    return v;
  }
  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    throw IoError("corrupt checkpoint: " + what, static_cast<std::int64_t>(at));
  }

 private:
  const std::vector<unsigned char>& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

inline void write_model(Writer& w, const ModelState& m) {
  const NetworkSpec& s = m.spec;
  w.u32(static_cast<std::uint32_t>(s.layer_sizes.size()));
  for (int v : s.layer_sizes) w.i32(v);
  w.u8(static_cast<std::uint8_t>(s.activation));
  w.f64(s.leaky_slope);
  w.i32(s.num_classes);
  w.i32(s.label_embed_dim);
  w.u8(static_cast<std::uint8_t>(s.output_activation));
  w.vec(m.params);
}

inline Activation read_activation(Reader& r) {
  const std::size_t at = r.offset();
  const std::uint8_t a = r.u8();
  if (a > static_cast<std::uint8_t>(Activation::kIdentity)) {
    r.fail("unknown activation", at);
  }
  return static_cast<Activation>(a);
}

inline ModelState read_model(Reader& r) {
  ModelState m;
  const std::size_t at = r.offset();
  const std::uint32_t layers = r.u32();
  if (layers < 2 || layers > 4096) r.fail("bad layer count", at);
  for (std::uint32_t i = 0; i < layers; ++i) m.spec.layer_sizes.push_back(r.i32());
  m.spec.activation = read_activation(r);
  m.spec.leaky_slope = r.f64();
  m.spec.num_classes = r.i32();
  m.spec.label_embed_dim = r.i32();
  m.spec.output_activation = read_activation(r);
  try {
    m.spec.validate();
  } catch (const ConfigError& e) {
    r.fail(std::string("invalid network spec: ") + e.what(), at);
  }
  const std::size_t params_at = r.offset();
  m.params = r.vec();
  if (m.params.size() != m.spec.param_count()) {
    r.fail("parameter count does not match network spec", params_at);
  }
  return m;
}

inline void write_adam(Writer& w, const AdamState& a) {
  w.i64(a.step_count);
  w.f64(a.hp.alpha);
  w.f64(a.hp.beta1);
  w.f64(a.hp.beta2);
  w.f64(a.hp.eps_hat);
  w.vec(a.first_moment);
  w.vec(a.second_moment);
}

inline AdamState read_adam(Reader& r) {
  AdamState a;
  a.step_count = r.i64();
  a.hp.alpha = r.f64();
  a.hp.beta1 = r.f64();
  a.hp.beta2 = r.f64();
  a.hp.eps_hat = r.f64();
  a.first_moment = r.vec();
  const std::size_t at = r.offset();
  a.second_moment = r.vec();
  if (a.first_moment.size() != a.second_moment.size()) {
    r.fail("Adam moment lengths differ", at);
  }
  return a;
}

inline void write_optional(Writer& w, const std::optional<double>& v) {
  w.u8(v.has_value());
  w.f64(v.value_or(0.0));
}

inline std::optional<double> read_optional(Reader& r) {
  const bool has = r.flag();
  const double v = r.f64();
  return has ? std::optional<double>(v) : std::nullopt;
}

}  // namespace ckpt_internal

inline std::vector<unsigned char> serialize_checkpoint(const TrainerState& s) {
  using namespace ckpt_internal;
  Writer w;
  w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  write_model(w, s.d);
  write_model(w, s.g);
  write_adam(w, s.d_opt);
  write_adam(w, s.g_opt);
  w.u8(s.schedule.has_value());
  if (s.schedule) {
    const ScheduleState& sc = *s.schedule;
    w.f64(sc.beta);
    w.f64(sc.floor);
    w.u32(static_cast<std::uint32_t>(sc.ladder.size()));
    for (int v : sc.ladder) w.i32(v);
    w.i32(sc.rung_index);
    write_optional(w, sc.ema);
    w.i32(sc.steps_since_change);
    w.i32(sc.grace);
    w.u8(sc.exhausted_warned);
  }
  write_optional(w, s.fake_acc_ema);
  w.str(s.rng.serialize());
  w.i64(s.t);
  w.i64(s.k);
  w.i64(s.accountant_T);
  const PrivacySpec& p = s.accounted_privacy;
  w.f64(p.clip_norm);
  w.f64(p.noise_multiplier);
  w.i32(p.expected_batch);
  w.f64(p.delta);
  w.f64(p.sampling_rate);
  w.u8(p.private_mode);
  w.i32(s.n_d_current);
  w.i32(s.d_steps_since_g);
  w.f64(s.last_d_loss);
  w.f64(s.last_g_loss);
  auto& buf = w.buffer();
  w.u64(fnv1a(buf.data(), buf.size()));
  return std::move(buf);
}

inline TrainerState deserialize_checkpoint(const std::vector<unsigned char>& b) {
  using namespace ckpt_internal;
  if (b.size() < sizeof kCheckpointMagic + 4 + 8) {
    throw IoError("checkpoint too short", static_cast<std::int64_t>(b.size()));
  }
  if (std::memcmp(b.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
    throw IoError("not a checkpoint file (bad magic)", 0);
  }
  const std::size_t body_end = b.size() - 8;
  Reader r(b, body_end);
  for (std::size_t i = 0; i < sizeof kCheckpointMagic; ++i) r.u8();
  const std::size_t version_at = r.offset();
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version),
                  static_cast<std::int64_t>(version_at));
  }
  std::uint64_t stored = 0;
  for (int i = 0; i < 8; ++i) stored |= std::uint64_t{b[body_end + i]} << (8 * i);
  if (stored != fnv1a(b.data(), body_end)) {
    throw IoError("checkpoint checksum mismatch",
                  static_cast<std::int64_t>(body_end));
  }

  TrainerState s;
  s.d = read_model(r);
  s.g = read_model(r);
  s.d_opt = read_adam(r);
  s.g_opt = read_adam(r);
  if (s.d_opt.first_moment.size() != s.d.param_count() ||
      s.g_opt.first_moment.size() != s.g.param_count()) {
    r.fail("optimizer state does not match model size", r.offset());
  }
  if (r.flag()) {
    ScheduleState sc;
    sc.beta = r.f64();
    sc.floor = r.f64();
    const std::size_t at = r.offset();
    const std::uint32_t n = r.u32();
    if (n > 64) r.fail("ladder too long", at);
    sc.ladder.clear();
    for (std::uint32_t i = 0; i < n; ++i) sc.ladder.push_back(r.i32());
    sc.rung_index = r.i32();
    sc.ema = read_optional(r);
    sc.steps_since_change = r.i32();
    sc.grace = r.i32();
    sc.exhausted_warned = r.flag();
    try {
      sc.validate();
    } catch (const ConfigError& e) {
      r.fail(std::string("invalid schedule: ") + e.what(), at);
    }
    s.schedule = std::move(sc);
  }
  s.fake_acc_ema = read_optional(r);
  const std::size_t rng_at = r.offset();
  try {
    s.rng = Rng::deserialize(r.str());
  } catch (const IoError&) {
    r.fail("bad random engine state", rng_at);
  }
  s.t = r.i64();
  s.k = r.i64();
  s.accountant_T = r.i64();
  PrivacySpec& p = s.accounted_privacy;
  p.clip_norm = r.f64();
  p.noise_multiplier = r.f64();
  p.expected_batch = r.i32();
  p.delta = r.f64();
  p.sampling_rate = r.f64();
  p.private_mode = r.flag();
  s.n_d_current = r.i32();
  s.d_steps_since_g = r.i32();
  s.last_d_loss = r.f64();
  s.last_g_loss = r.f64();
  if (r.offset() != body_end) r.fail("trailing bytes", r.offset());
  if (s.t < 0 || s.k < 0 || s.accountant_T < 0 || s.n_d_current < 1) {
    r.fail("negative counters", body_end);
  }
  return s;
}

// Writes to a temporary sibling and renames it into place.
inline void save_checkpoint(const TrainerState& s, const std::string& path) {
  const auto bytes = serialize_checkpoint(s);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp + ": " + ec.message());
}

inline TrainerState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>()};
  return deserialize_checkpoint(bytes);
}

// Field-by-field equality, for round-trip checks.
inline bool same_state(const TrainerState& a, const TrainerState& b) {
  auto same_double = [](double x, double y) {
    return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
  };
  return a.d == b.d && a.g == b.g && a.d_opt == b.d_opt && a.g_opt == b.g_opt &&
         a.schedule == b.schedule && a.fake_acc_ema == b.fake_acc_ema &&
         a.rng == b.rng && a.t == b.t && a.k == b.k &&
         a.accountant_T == b.accountant_T &&
         a.accounted_privacy == b.accounted_privacy &&
         a.n_d_current == b.n_d_current &&
         a.d_steps_since_g == b.d_steps_since_g &&
         same_double(a.last_d_loss, b.last_d_loss) &&
         same_double(a.last_g_loss, b.last_g_loss);
}

}  // namespace dpgan
