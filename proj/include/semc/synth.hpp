// Synthetic data machinery: union-of-subspaces ground truth M = A Z B^T,
// noisy side-information bases at a target model SNR, Bernoulli sampling
// patterns, and impulsive two-component Gaussian-mixture measurement noise.
// Every generator is a pure function of its seed; SNR targets are hit
// exactly by normalizing with the realized noise norm.

#pragma once

#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "semc/dense.hpp"
#include "semc/io.hpp"

namespace semc {

// splitmix64-style mixing; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0) {
  std::uint64_t z = seed;
  for (std::uint64_t salt : {a, b, c}) {
    z += 0x9e3779b97f4a7c15ull + salt;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z = z ^ (z >> 31);
  }
  return z;
}

struct SubspaceModel {
  int subspaces = 1;        // S
  int dim = 1;              // d
  int basis_dim = 1;        // ambient dimension r of the basis rows
  std::vector<int> counts;  // N_s, one per subspace

  Index total_points() const {
    return std::accumulate(counts.begin(), counts.end(), Index{0});
  }

  void validate() const {
    if (subspaces < 1 || dim < 1 || basis_dim < 1) {
      throw std::invalid_argument("SubspaceModel: S, d, r must be >= 1");
    }
    if (dim > basis_dim) throw std::invalid_argument("SubspaceModel: d must be <= r");
    if (static_cast<int>(counts.size()) != subspaces) {
      throw std::invalid_argument("SubspaceModel: one count per subspace required");
    }
    for (int c : counts) {
      if (c < 1) throw std::invalid_argument("SubspaceModel: counts must be >= 1");
    }
  }
};

struct GroundTruth {
  Matrix a;  // m x r
  Matrix z;  // r x r, full rank
  Matrix b;  // n x r, rows drawn from the union of subspaces
  Matrix m;  // m x n = A Z B^T
  std::vector<int> labels;  // planted subspace index per column of m
};

namespace detail {

inline Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& gen) {
  std::normal_distribution<double> dist;
  Matrix a(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) a(i, j) = dist(gen);
  return a;
}

inline Index count_rank(const Matrix& a, double rel_tol) {
  SvdFactors f = svd(a);
  Index rank = 0;
  for (Index i = 0; i < f.sigma.size(); ++i) {
    if (f.sigma(i) > rel_tol * f.sigma(0)) ++rank;
  }
  return rank;
}

}  // namespace detail

/// Ground truth with rank min(m, n, r, S*d); degenerate draws are retried
/// with fresh randomness (bounded attempts).
inline GroundTruth generate_ground_truth(const SubspaceModel& model, Index m_rows,
                                         std::uint64_t seed) {
  model.validate();
  if (m_rows < 1) throw std::invalid_argument("generate_ground_truth: m must be >= 1");
  const Index n = model.total_points();
  const Index r = model.basis_dim;
  const Index target_rank =
      std::min({m_rows, n, r, static_cast<Index>(model.subspaces) * model.dim});
  const double tol = default_rank_tol(std::max(m_rows, n), std::max(m_rows, n));

  for (int attempt = 0; attempt < 16; ++attempt) {
    std::mt19937_64 gen(mix_seed(seed, 0xa11ce, static_cast<std::uint64_t>(attempt)));
    GroundTruth gt;
    gt.b = Matrix(n, r);
    gt.labels.resize(static_cast<size_t>(n));
    Index row = 0;
    for (int s = 0; s < model.subspaces; ++s) {
      Matrix raw = detail::gaussian_matrix(r, model.dim, gen);
      Eigen::HouseholderQR<Matrix> qr(raw);
      Matrix basis = qr.householderQ() * Matrix::Identity(r, model.dim);
      for (int k = 0; k < model.counts[static_cast<size_t>(s)]; ++k, ++row) {
        Vector coef = detail::gaussian_matrix(model.dim, 1, gen);
        gt.b.row(row) = (basis * coef).transpose();
        gt.labels[static_cast<size_t>(row)] = s;
      }
    }
    gt.a = detail::gaussian_matrix(m_rows, r, gen);
    gt.z = detail::gaussian_matrix(r, r, gen);
    if (detail::count_rank(gt.z, tol) < r) continue;
    gt.m = gt.a * gt.z * gt.b.transpose();
    if (detail::count_rank(gt.m, tol) != target_rank) continue;
    return gt;
  }
  throw NumericalError("generate_ground_truth: degenerate-draw retry limit exceeded");
}

/// B' = B + N with i.i.d. Gaussian N scaled so the realized Frobenius ratio
/// hits the target exactly: 10 log10(||B||^2 / ||N||^2) = snr_db.
/// An infinite target returns an exact copy.
inline Matrix add_model_noise(const Matrix& exact, double snr_db, std::uint64_t seed) {
  require_finite(exact, "add_model_noise");
  if (std::isinf(snr_db) && snr_db > 0.0) return exact;
  if (std::isnan(snr_db)) throw std::invalid_argument("add_model_noise: snr_db is NaN");
  std::mt19937_64 gen(mix_seed(seed, 0xb0153));
  Matrix noise = detail::gaussian_matrix(exact.rows(), exact.cols(), gen);
  const double nn = noise.norm();
  if (nn == 0.0 || exact.norm() == 0.0) return exact;
  const double scale = exact.norm() / (nn * std::pow(10.0, snr_db / 20.0));
  return exact + scale * noise;
}

/// i.i.d. Bernoulli(p) sampling pattern, row-major draw order.
inline SamplingPattern sample_pattern(Index m, Index n, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sample_pattern: p in [0,1]");
  if (m < 1 || n < 1) throw DimensionError("sample_pattern: bad dimensions");
  std::mt19937_64 gen(mix_seed(seed, 0x0b5e7));
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  SamplingPattern pat = SamplingPattern::none(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) pat.mask(i, j) = dist(gen) < p;
  return pat;
}

/// Two-component Gaussian mixture for impulsive measurement noise.
struct GmmNoise {
  double alpha1 = 0.3, alpha2 = 0.7;
  double mu1 = 0.1, mu2 = -0.2;
  double sigma1_sq = 1.0, sigma2_sq = 1.0;
  double per_entry_probability = 0.2;

  void validate() const {
    if (std::abs(alpha1 + alpha2 - 1.0) > 1e-12) {
      throw std::invalid_argument("GmmNoise: weights must sum to 1");
    }
    if (!(alpha1 >= 0.0 && alpha2 >= 0.0)) {
      throw std::invalid_argument("GmmNoise: weights must be >= 0");
    }
    if (!(sigma1_sq > 0.0 && sigma2_sq > 0.0)) {
      throw std::invalid_argument("GmmNoise: variances must be > 0");
    }
    if (!(per_entry_probability >= 0.0 && per_entry_probability <= 1.0)) {
      throw std::invalid_argument("GmmNoise: per-entry probability in [0,1]");
    }
  }

  double mean() const { return alpha1 * mu1 + alpha2 * mu2; }

  double sample(std::mt19937_64& gen) const {
    std::uniform_real_distribution<double> pick(0.0, 1.0);
    std::normal_distribution<double> n1(mu1, std::sqrt(sigma1_sq));
    std::normal_distribution<double> n2(mu2, std::sqrt(sigma2_sq));
    return pick(gen) < alpha1 ? n1(gen) : n2(gen);
  }
};

struct NoisyObservations {
  Matrix values;
  // Common factor applied to the raw mixture draws; variances scale by its
  // square, means by the factor itself, so the mixture shape is preserved.
  double scale = 0.0;
};

/// Corrupts each observed entry with the per-entry probability by a mixture
/// draw, then rescales all draws by one common factor so the realized
/// measurement SNR 10 log10(||P(M)||^2 / ||noise||^2) equals the target
/// exactly. Higher observation probabilities therefore get strictly smaller
/// factors for the same target.
inline NoisyObservations add_measurement_noise(const Matrix& m_obs,
                                               const SamplingPattern& omega,
                                               const GmmNoise& gmm, double target_snr_db,
                                               std::uint64_t seed) {
  gmm.validate();
  require_finite(m_obs, "add_measurement_noise");
  if (m_obs.rows() != omega.rows() || m_obs.cols() != omega.cols()) {
    throw DimensionError("add_measurement_noise: pattern shape mismatch");
  }
  if (omega.observed_count() == 0) {
    throw std::invalid_argument("add_measurement_noise: empty sampling pattern");
  }
  if (!std::isfinite(target_snr_db)) {
    throw std::invalid_argument("add_measurement_noise: target SNR must be finite");
  }

  std::mt19937_64 gen(mix_seed(seed, 0x6a0155));
  std::uniform_real_distribution<double> corrupt(0.0, 1.0);
  Matrix raw = Matrix::Zero(m_obs.rows(), m_obs.cols());
  for (Index i = 0; i < m_obs.rows(); ++i) {
    for (Index j = 0; j < m_obs.cols(); ++j) {
      if (!omega.mask(i, j)) continue;
      if (corrupt(gen) < gmm.per_entry_probability) raw(i, j) = gmm.sample(gen);
    }
  }
  const double raw_norm = raw.norm();
  if (raw_norm == 0.0) return NoisyObservations{m_obs, 0.0};
  const double scale =
      m_obs.norm() / (raw_norm * std::pow(10.0, target_snr_db / 20.0));
  return NoisyObservations{m_obs + scale * raw, scale};
}

/// On-disk dataset bundle: ground truth, side information, pattern, noisy
/// observations, and a manifest with the generating parameters.
struct DatasetBundle {
  GroundTruth gt;
  Matrix b_prime;
  Matrix a_prime;
  SamplingPattern pattern;
  Matrix observed;
  Manifest manifest;
};

inline void write_dataset_bundle(const std::filesystem::path& dir, const DatasetBundle& b) {
  std::filesystem::create_directories(dir);
  write_matrix_file(dir / "M.txt", b.gt.m);
  write_matrix_file(dir / "A.txt", b.gt.a);
  write_matrix_file(dir / "Z.txt", b.gt.z);
  write_matrix_file(dir / "B.txt", b.gt.b);
  write_matrix_file(dir / "B_prime.txt", b.b_prime);
  write_matrix_file(dir / "A_prime.txt", b.a_prime);
  write_pattern_file(dir / "pattern.txt", b.pattern);
  write_matrix_file(dir / "observed.txt", b.observed);
  {
    std::ostringstream labels;
    for (size_t i = 0; i < b.gt.labels.size(); ++i) {
      if (i > 0) labels << ' ';
      labels << b.gt.labels[i];
    }
    Manifest manifest = b.manifest;
    manifest.emplace_back("labels", labels.str());
    write_manifest_file(dir / "manifest.txt", manifest);
  }
}

}  // namespace semc
