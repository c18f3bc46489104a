#pragma once

// Signatures, channels, activities and received signals:
//   Y_b = sum_j S_j X_bj + W_b,   x_bjn = a_jn g_bjn hbar_bjn.

#include <Eigen/Dense>

#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "mcad/config.hpp"
#include "mcad/errors.hpp"
#include "mcad/geometry.hpp"
#include "mcad/random.hpp"

namespace mcad {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexRow = Eigen::RowVectorXcd;

/// One realization of the network: activities, fading, signatures, channels
/// and the received signal at every synthesized BS.
struct ScenarioInstance {
  int num_cells = 0;
  int users_per_cell = 0;
  int seq_len = 0;
  int antennas = 0;
  double noise_variance = 0.0;

  std::vector<std::uint8_t> activities;  ///< a_jn at [j*N + n]
  std::vector<double> large_scale;       ///< g_bjn at [(b*B + j)*N + n]
  ComplexMatrix signatures;              ///< L x (N B); column j*N + n is s_jn^T
  std::vector<ComplexMatrix> channels;   ///< hbar_bj (N x M) at [b*B + j]; empty if b not synthesized
  std::vector<ComplexMatrix> noise;      ///< W_b (L x M); empty if b not synthesized
  std::vector<ComplexMatrix> received;   ///< Y_b (L x M); empty if b not synthesized

  bool active(int cell, int user) const { return activities[static_cast<std::size_t>(cell) * users_per_cell + user] != 0; }

  double gain(int bs, int cell, int user) const {
    return large_scale[(static_cast<std::size_t>(bs) * num_cells + cell) * users_per_cell + user];
  }

  bool has_receiver(int bs) const { return received[bs].size() > 0; }

  /// g_bjn for every user in the network, in signature-column order.
  Eigen::VectorXd gains_at(int bs) const {
    const int total = num_cells * users_per_cell;
    Eigen::VectorXd g(total);
    for (int k = 0; k < total; ++k) g[k] = large_scale[static_cast<std::size_t>(bs) * total + k];
    return g;
  }

  /// S_j: the L x N block of signatures of cell j.
  auto cell_signatures(int cell) const {
    return signatures.middleCols(static_cast<Eigen::Index>(cell) * users_per_cell, users_per_cell);
  }

  /// X_bj (N x M): rows a_jn g_bjn hbar_bjn.
  ComplexMatrix x_block(int bs, int cell) const {
    const ComplexMatrix& h = channels[static_cast<std::size_t>(bs) * num_cells + cell];
    if (h.size() == 0) throw DomainError("x_block: BS " + std::to_string(bs) + " was not synthesized");
    ComplexMatrix x = ComplexMatrix::Zero(users_per_cell, antennas);
    for (int n = 0; n < users_per_cell; ++n) {
      if (active(cell, n)) x.row(n) = gain(bs, cell, n) * h.row(n);
    }
    return x;
  }

  /// sum_{j != b} S_j X_bj.
  ComplexMatrix interference(int bs) const {
    ComplexMatrix y = ComplexMatrix::Zero(seq_len, antennas);
    for (int j = 0; j < num_cells; ++j) {
      if (j != bs) y += cell_signatures(j) * x_block(bs, j);
    }
    return y;
  }
};

/// L x (N B) matrix with i.i.d. CN(0, 1/L) entries.
inline ComplexMatrix generate_signatures(const NetworkConfig& cfg, std::uint64_t seed) {
  const int cols = cfg.num_cells * cfg.users_per_cell;
  ComplexMatrix s(cfg.seq_len, cols);
  Rng rng(seed, Stream::signatures);
  const double var = 1.0 / cfg.seq_len;
  for (int c = 0; c < cols; ++c) {
    for (int l = 0; l < cfg.seq_len; ++l) s(l, c) = rng.complex_normal(var);
  }
  return s;
}

/// Large-scale fading from every BS to every user of a fixed drop.
inline std::vector<double> large_scale_fading(const NetworkConfig& cfg, const CellLayout& layout,
                                              const UserDrop& users) {
  const int b_count = layout.num_cells();
  const int n_count = users.users_per_cell;
  std::vector<double> g(static_cast<std::size_t>(b_count) * b_count * n_count);
  for (int b = 0; b < b_count; ++b) {
    for (int j = 0; j < b_count; ++j) {
      for (int n = 0; n < n_count; ++n) {
        g[(static_cast<std::size_t>(b) * b_count + j) * n_count + n] =
            pathloss_gain(cfg, distance(layout.bs[b], users.at(j, n)));
      }
    }
  }
  return g;
}

struct SynthesisOptions {
  std::vector<int> receivers;  ///< BSs whose Y_b is built; empty means all
  bool include_noise = true;
};

/// One scenario for a fixed user drop. Each random component has its own
/// keyed stream, so BS b's signal does not depend on which other BSs are built.
inline ScenarioInstance synthesize(const NetworkConfig& cfg, const CellLayout& layout, const UserDrop& users,
                                   std::uint64_t seed, const SynthesisOptions& options = {}) {
  cfg.validate();
  if (layout.num_cells() != cfg.num_cells || users.users_per_cell != cfg.users_per_cell) {
    throw DimensionError("synthesize: layout/users do not match the configuration");
  }
  ScenarioInstance sc;
  sc.num_cells = cfg.num_cells;
  sc.users_per_cell = cfg.users_per_cell;
  sc.seq_len = cfg.seq_len;
  sc.antennas = cfg.antennas;
  sc.noise_variance = options.include_noise ? cfg.noise_variance() : 0.0;

  const int b_count = cfg.num_cells;
  const int n_count = cfg.users_per_cell;
  const int m_count = cfg.antennas;

  sc.activities.resize(static_cast<std::size_t>(b_count) * n_count);
  {
    Rng rng(seed, Stream::activities);
    for (auto& a : sc.activities) a = rng.bernoulli(cfg.activity_prob) ? 1 : 0;
  }
  sc.large_scale = large_scale_fading(cfg, layout, users);
  sc.signatures = generate_signatures(cfg, seed);

  std::vector<int> receivers = options.receivers;
  if (receivers.empty()) {
    for (int b = 0; b < b_count; ++b) receivers.push_back(b);
  }
  sc.channels.assign(static_cast<std::size_t>(b_count) * b_count, ComplexMatrix());
  sc.noise.assign(b_count, ComplexMatrix());
  sc.received.assign(b_count, ComplexMatrix());

  for (int b : receivers) {
    if (b < 0 || b >= b_count) throw DomainError("synthesize: receiver index out of range");
    for (int j = 0; j < b_count; ++j) {
      ComplexMatrix h(n_count, m_count);
      Rng rng(seed, Stream::channels, static_cast<std::uint64_t>(b) * b_count + j);
      for (int n = 0; n < n_count; ++n) {
        for (int m = 0; m < m_count; ++m) h(n, m) = rng.complex_normal(1.0);
      }
      sc.channels[static_cast<std::size_t>(b) * b_count + j] = std::move(h);
    }
    ComplexMatrix w = ComplexMatrix::Zero(cfg.seq_len, m_count);
    if (options.include_noise) {
      Rng rng(seed, Stream::noise, static_cast<std::uint64_t>(b));
      for (int m = 0; m < m_count; ++m) {
        for (int l = 0; l < cfg.seq_len; ++l) w(l, m) = rng.complex_normal(sc.noise_variance);
      }
    }
    // Only active users contribute; accumulate their rank-one terms.
    ComplexMatrix y = w;
    for (int j = 0; j < b_count; ++j) {
      const ComplexMatrix& h = sc.channels[static_cast<std::size_t>(b) * b_count + j];
      for (int n = 0; n < n_count; ++n) {
        if (!sc.active(j, n)) continue;
        const Eigen::Index col = static_cast<Eigen::Index>(j) * n_count + n;
        y.noalias() += sc.signatures.col(col) * (sc.gain(b, j, n) * h.row(n));
      }
    }
    sc.noise[b] = std::move(w);
    sc.received[b] = std::move(y);
  }
  return sc;
}

/// Convenience overload drawing the user drop from the same seed.
inline ScenarioInstance synthesize(const NetworkConfig& cfg, const CellLayout& layout, std::uint64_t seed,
                                   const SynthesisOptions& options = {}) {
  return synthesize(cfg, layout, sample_users(cfg, layout, seed), seed, options);
}

/// sigma~_w^2 = (lambda/L) N (B-1) E[G_/b^2] + sigma_w^2.
inline double effective_noise_variance_tin(const NetworkConfig& cfg) {
  const double noise = cfg.noise_variance();
  if (cfg.num_cells == 1) return noise;
  return cfg.activity_prob / cfg.seq_len * cfg.users_per_cell * (cfg.num_cells - 1) *
             second_moment_out_of_cell(cfg) +
         noise;
}

// ---------------------------------------------------------------------------
// Binary container
//
//   offset  type       field
//   0       char[8]    magic "MCADSCN1"
//   8       u32        version (1)
//   12      u32 x 4    B, N, L, M
//   28      f64        noise variance
//   36      u32        receiver bitmask length R, then R bytes (1 = synthesized)
//   ...     u8 x B*N   activities
//   ...     f64 x B*B*N large-scale fading
//   ...     c128       signatures, column-major (re, im)
//   per synthesized b: channels hbar_bj for j = 0..B-1 (N x M, column-major),
//                      W_b (L x M), Y_b (L x M)
//
// All integers and doubles are little-endian.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_bytes(std::ostream& out, const void* p, std::size_t n, bool swap) {
  if (!swap) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    return;
  }
  const auto* c = static_cast<const char*>(p);
  for (std::size_t i = n; i > 0; --i) out.put(c[i - 1]);
}

inline void get_bytes(std::istream& in, void* p, std::size_t n, bool swap) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!in) throw Error("scenario container: unexpected end of data");
  if (swap) {
    auto* c = static_cast<char*>(p);
    for (std::size_t i = 0; i < n / 2; ++i) std::swap(c[i], c[n - 1 - i]);
  }
}

inline constexpr bool kSwap = std::endian::native == std::endian::big;

inline void put_u32(std::ostream& out, std::uint32_t v) { put_bytes(out, &v, 4, kSwap); }
inline void put_f64(std::ostream& out, double v) { put_bytes(out, &v, 8, kSwap); }
inline std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  get_bytes(in, &v, 4, kSwap);
  return v;
}
inline double get_f64(std::istream& in) {
  double v = 0.0;
  get_bytes(in, &v, 8, kSwap);
  return v;
}

inline void put_matrix(std::ostream& out, const ComplexMatrix& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      put_f64(out, m(r, c).real());
      put_f64(out, m(r, c).imag());
    }
  }
}

inline ComplexMatrix get_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  ComplexMatrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double re = get_f64(in);
      const double im = get_f64(in);
      m(r, c) = {re, im};
    }
  }
  return m;
}

inline constexpr char kScenarioMagic[8] = {'M', 'C', 'A', 'D', 'S', 'C', 'N', '1'};

}  // namespace detail

inline void write_scenario(std::ostream& out, const ScenarioInstance& sc) {
  using namespace detail;
  out.write(kScenarioMagic, 8);
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(sc.num_cells));
  put_u32(out, static_cast<std::uint32_t>(sc.users_per_cell));
  put_u32(out, static_cast<std::uint32_t>(sc.seq_len));
  put_u32(out, static_cast<std::uint32_t>(sc.antennas));
  put_f64(out, sc.noise_variance);
  put_u32(out, static_cast<std::uint32_t>(sc.num_cells));
  for (int b = 0; b < sc.num_cells; ++b) out.put(sc.has_receiver(b) ? 1 : 0);
  out.write(reinterpret_cast<const char*>(sc.activities.data()),
            static_cast<std::streamsize>(sc.activities.size()));
  for (double g : sc.large_scale) put_f64(out, g);
  put_matrix(out, sc.signatures);
  for (int b = 0; b < sc.num_cells; ++b) {
    if (!sc.has_receiver(b)) continue;
    for (int j = 0; j < sc.num_cells; ++j) put_matrix(out, sc.channels[static_cast<std::size_t>(b) * sc.num_cells + j]);
    put_matrix(out, sc.noise[b]);
    put_matrix(out, sc.received[b]);
  }
  if (!out) throw Error("scenario container: write failed");
}

inline ScenarioInstance read_scenario(std::istream& in) {
  using namespace detail;
  char magic[8] = {};
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kScenarioMagic, 8) != 0) throw Error("scenario container: bad magic");
  if (get_u32(in) != 1) throw Error("scenario container: unsupported version");
  ScenarioInstance sc;
  sc.num_cells = static_cast<int>(get_u32(in));
  sc.users_per_cell = static_cast<int>(get_u32(in));
  sc.seq_len = static_cast<int>(get_u32(in));
  sc.antennas = static_cast<int>(get_u32(in));
  sc.noise_variance = get_f64(in);
  const int b_count = sc.num_cells;
  const int n_count = sc.users_per_cell;
  if (static_cast<int>(get_u32(in)) != b_count) throw Error("scenario container: bad receiver mask");
  std::vector<char> mask(static_cast<std::size_t>(b_count));
  in.read(mask.data(), b_count);
  sc.activities.resize(static_cast<std::size_t>(b_count) * n_count);
  in.read(reinterpret_cast<char*>(sc.activities.data()), static_cast<std::streamsize>(sc.activities.size()));
  if (!in) throw Error("scenario container: unexpected end of data");
  sc.large_scale.resize(static_cast<std::size_t>(b_count) * b_count * n_count);
  for (double& g : sc.large_scale) g = get_f64(in);
  sc.signatures = get_matrix(in, sc.seq_len, static_cast<Eigen::Index>(b_count) * n_count);
  sc.channels.assign(static_cast<std::size_t>(b_count) * b_count, ComplexMatrix());
  sc.noise.assign(b_count, ComplexMatrix());
  sc.received.assign(b_count, ComplexMatrix());
  for (int b = 0; b < b_count; ++b) {
    if (!mask[b]) continue;
    for (int j = 0; j < b_count; ++j) {
      sc.channels[static_cast<std::size_t>(b) * b_count + j] = get_matrix(in, n_count, sc.antennas);
    }
    sc.noise[b] = get_matrix(in, sc.seq_len, sc.antennas);
    sc.received[b] = get_matrix(in, sc.seq_len, sc.antennas);
  }
  return sc;
}

}  // namespace mcad
