// Copyright 2026 The rcg authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RCG_METRICS_HPP
#define RCG_METRICS_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rcg/encoder.hpp"
#include "rcg/tensor.hpp"

namespace rcg {

/// Gaussian moments of a sample set: mean and population covariance.
struct GaussianFit {
  std::vector<double> mean;
  Tensor<double> cov;  // [d, d] symmetric

  std::size_t dim() const { return mean.size(); }
};

/// Sample mean and population covariance (divide by n), two-pass.
template <typename T>
GaussianFit gaussian_fit(const Tensor<T>& samples) {
  const std::size_t n = samples.rows(), d = samples.cols();
  if (n < 2) throw UsageError("gaussian_fit needs at least 2 samples");
  GaussianFit fit;
  fit.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const T* row = samples.row(i);
    for (std::size_t j = 0; j < d; ++j) fit.mean[j] += static_cast<double>(row[j]);
  }
  for (double& m : fit.mean) m /= static_cast<double>(n);
  fit.cov = Tensor<double>::zeros({d, d});
  std::vector<double> centered(d);
  for (std::size_t i = 0; i < n; ++i) {
    const T* row = samples.row(i);
    for (std::size_t j = 0; j < d; ++j) centered[j] = static_cast<double>(row[j]) - fit.mean[j];
    for (std::size_t a = 0; a < d; ++a) {
      double* cov_row = fit.cov.row(a);
      const double ca = centered[a];
      for (std::size_t b = a; b < d; ++b) cov_row[b] += ca * centered[b];
    }
  }
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      fit.cov.at(a, b) /= static_cast<double>(n);
      fit.cov.at(b, a) = fit.cov.at(a, b);
    }
  return fit;
}

namespace detail {

inline double off_diagonal_sq(const Tensor<double>& a) {
  const std::size_t d = a.rows();
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (i != j) s += a.at(i, j) * a.at(i, j);
  return s;
}

/// Cyclic Jacobi rotations for a symmetric matrix. Destroys `a`; returns
/// eigenvalues in `evals` and column eigenvectors in `evecs`. Adequate and
/// robust for the d <= a few hundred matrices this project needs.
inline void jacobi_eigen_symmetric(Tensor<double> a, std::vector<double>& evals,
                                   Tensor<double>& evecs) {
  const std::size_t d = a.rows();
  evecs = Tensor<double>::zeros({d, d});
  for (std::size_t i = 0; i < d; ++i) evecs.at(i, i) = 1.0;

  double norm_sq = 0.0;
  for (double x : a.data) norm_sq += x * x;
  const double tol = 1e-28 * (norm_sq > 0.0 ? norm_sq : 1.0);

  for (int sweep = 0; sweep < 100 && off_diagonal_sq(a) > tol; ++sweep) {
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const double apq = a.at(p, q);
        if (apq == 0.0) continue;
        const double app = a.at(p, p), aqq = a.at(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          const double akp = a.at(k, p), akq = a.at(k, q);
          a.at(k, p) = c * akp - s * akq;
          a.at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = a.at(p, k), aqk = a.at(q, k);
          a.at(p, k) = c * apk - s * aqk;
          a.at(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double vkp = evecs.at(k, p), vkq = evecs.at(k, q);
          evecs.at(k, p) = c * vkp - s * vkq;
          evecs.at(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  evals.resize(d);
  for (std::size_t i = 0; i < d; ++i) evals[i] = a.at(i, i);
}

inline void require_symmetric(const Tensor<double>& m, const char* who) {
  const std::size_t d = m.rows();
  if (m.cols() != d) throw UsageError(std::string(who) + ": covariance must be square");
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      if (std::fabs(m.at(i, j) - m.at(j, i)) > 1e-10)
        throw UsageError(std::string(who) + ": covariance not symmetric");
}

/// Symmetric PSD square root via eigendecomposition; eigenvalues below
/// 1e-8 are clamped to 0.
inline Tensor<double> spd_sqrt(const Tensor<double>& m) {
  std::vector<double> evals;
  Tensor<double> evecs;
  jacobi_eigen_symmetric(m, evals, evecs);
  const std::size_t d = m.rows();
  for (double& l : evals) l = l < 1e-8 ? 0.0 : std::sqrt(l);
  Tensor<double> out = Tensor<double>::zeros({d, d});
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += evecs.at(i, k) * evals[k] * evecs.at(j, k);
      out.at(i, j) = s;
      out.at(j, i) = s;
    }
  return out;
}

}  // namespace detail

/// Frechet distance between two Gaussian fits:
///   ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa^1/2 Sb Sa^1/2)^1/2).
/// Matrix square roots via symmetric eigendecomposition with
/// negative-eigenvalue clamping.
inline double frechet_distance(const GaussianFit& a, const GaussianFit& b) {
  if (a.dim() != b.dim()) throw UsageError("frechet_distance dimension mismatch");
  detail::require_symmetric(a.cov, "frechet_distance");
  detail::require_symmetric(b.cov, "frechet_distance");
  if (a.mean == b.mean && a.cov.data == b.cov.data) return 0.0;  // FD(a, a) = 0
  const std::size_t d = a.dim();

  double mean_term = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = a.mean[i] - b.mean[i];
    mean_term += diff * diff;
  }

  const Tensor<double> sa_half = detail::spd_sqrt(a.cov);
  // M = Sa^1/2 Sb Sa^1/2, symmetrized against roundoff.
  Tensor<double> tmp = matmul(sa_half, b.cov);
  Tensor<double> m = matmul(tmp, sa_half);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      const double v = 0.5 * (m.at(i, j) + m.at(j, i));
      m.at(i, j) = v;
      m.at(j, i) = v;
    }
  std::vector<double> evals;
  Tensor<double> evecs;
  detail::jacobi_eigen_symmetric(m, evals, evecs);
  double trace_sqrt = 0.0;
  for (double l : evals) trace_sqrt += l < 1e-8 ? 0.0 : std::sqrt(l);

  double trace_term = 0.0;
  for (std::size_t i = 0; i < d; ++i) trace_term += a.cov.at(i, i) + b.cov.at(i, i);

  const double fd = mean_term + trace_term - 2.0 * trace_sqrt;
  return fd > 0.0 ? fd : 0.0;
}

/// One evaluation outcome, serializable as a line-delimited JSON record.
struct EvalReport {
  std::string metric;
  double value = 0.0;
  std::size_t n_gen = 0;
  std::size_t n_ref = 0;
  std::uint64_t seed = 0;
  double baseline = 0.0;

  nlohmann::json to_json() const {
    return {{"metric", metric}, {"value", value},       {"n_gen", n_gen},
            {"n_ref", n_ref},   {"seed", seed},         {"baseline", baseline}};
  }

  static EvalReport from_json(const nlohmann::json& j) {
    EvalReport r;
    r.metric = j.at("metric").get<std::string>();
    r.value = j.at("value").get<double>();
    r.n_gen = j.at("n_gen").get<std::size_t>();
    r.n_ref = j.at("n_ref").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.baseline = j.at("baseline").get<double>();
    return r;
  }
};

namespace detail {

template <typename T>
void require_fit_count(const Tensor<T>& samples, const char* who) {
  if (samples.rows() <= samples.cols())
    throw UsageError(std::string(who) + ": need more samples than dimensions for a covariance fit");
}

}  // namespace detail

/// Frechet distance between generated and reference representations. The
/// baseline field carries the FD between the two disjoint halves of the
/// reference set, the natural lower-bound reference for the metric.
template <typename T>
EvalReport rep_fd(const Tensor<T>& generated, const Tensor<T>& reference, std::uint64_t seed = 0) {
  if (generated.cols() != reference.cols()) throw UsageError("rep_fd dimension mismatch");
  detail::require_fit_count(generated, "rep_fd");
  detail::require_fit_count(reference, "rep_fd");
  EvalReport report;
  report.metric = "rep_fd";
  report.n_gen = generated.rows();
  report.n_ref = reference.rows();
  report.seed = seed;
  report.value = frechet_distance(gaussian_fit(generated), gaussian_fit(reference));

  const std::size_t half = reference.rows() / 2;
  if (half > reference.cols()) {
    Tensor<T> first = Tensor<T>::zeros({half, reference.cols()});
    Tensor<T> second = Tensor<T>::zeros({reference.rows() - half, reference.cols()});
    std::copy(reference.data.begin(), reference.data.begin() + half * reference.cols(),
              first.data.begin());
    std::copy(reference.data.begin() + half * reference.cols(), reference.data.end(),
              second.data.begin());
    report.baseline = frechet_distance(gaussian_fit(first), gaussian_fit(second));
  }
  return report;
}

/// Frechet distance in the trained encoder's feature space (unnormalized
/// projection outputs); the desk-scale stand-in for an external feature
/// network.
inline EvalReport feature_fd(const Tensor<float>& generated_images,
                             const Tensor<float>& reference_images, EncoderNet<float>& encoder,
                             std::uint64_t seed = 0) {
  if (!encoder.trained) throw UsageError("feature_fd requires a trained encoder");
  Tensor<float> gen_feat = encoder.forward(generated_images);
  Tensor<float> ref_feat = encoder.forward(reference_images);
  detail::require_fit_count(gen_feat, "feature_fd");
  detail::require_fit_count(ref_feat, "feature_fd");
  EvalReport report;
  report.metric = "feature_fd";
  report.n_gen = generated_images.rows();
  report.n_ref = reference_images.rows();
  report.seed = seed;
  report.value = frechet_distance(gaussian_fit(gen_feat), gaussian_fit(ref_feat));

  const std::size_t half = ref_feat.rows() / 2;
  if (half > ref_feat.cols()) {
    Tensor<float> first = Tensor<float>::zeros({half, ref_feat.cols()});
    Tensor<float> second = Tensor<float>::zeros({ref_feat.rows() - half, ref_feat.cols()});
    std::copy(ref_feat.data.begin(), ref_feat.data.begin() + half * ref_feat.cols(),
              first.data.begin());
    std::copy(ref_feat.data.begin() + half * ref_feat.cols(), ref_feat.data.end(),
              second.data.begin());
    report.baseline = frechet_distance(gaussian_fit(first), gaussian_fit(second));
  }
  return report;
}

/// Per-class mean representations from a labeled store.
template <typename T>
Tensor<T> class_centroids(const Tensor<T>& reps, const std::vector<int>& labels,
                          std::size_t num_classes) {
  if (reps.rows() != labels.size()) throw UsageError("class_centroids label count mismatch");
  const std::size_t d = reps.cols();
  Tensor<T> centroids = Tensor<T>::zeros({num_classes, d});
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t i = 0; i < reps.rows(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) continue;
    const std::size_t c = static_cast<std::size_t>(labels[i]);
    const T* row = reps.row(i);
    T* dst = centroids.row(c);
    for (std::size_t j = 0; j < d; ++j) dst[j] += row[j];
    ++counts[c];
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) throw UsageError("class " + std::to_string(c) + " has no labeled items");
    T* dst = centroids.row(c);
    for (std::size_t j = 0; j < d; ++j) dst[j] /= static_cast<T>(counts[c]);
  }
  return centroids;
}

/// Fraction of generated representations whose nearest centroid by cosine
/// similarity is the target class.
template <typename T>
double cluster_accuracy(const Tensor<T>& generated_reps, std::size_t target_class,
                        const Tensor<T>& centroids) {
  if (target_class >= centroids.rows()) throw UsageError("target class out of range");
  if (generated_reps.cols() != centroids.cols())
    throw UsageError("cluster_accuracy dimension mismatch");
  if (generated_reps.rows() == 0) throw UsageError("cluster_accuracy needs generated reps");
  const std::size_t d = centroids.cols();
  std::vector<double> centroid_norm(centroids.rows(), 0.0);
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    double nsq = 0.0;
    const T* row = centroids.row(c);
    for (std::size_t j = 0; j < d; ++j) nsq += static_cast<double>(row[j]) * static_cast<double>(row[j]);
    centroid_norm[c] = std::sqrt(nsq);
    if (centroid_norm[c] <= 0.0) throw UsageError("zero centroid in cluster_accuracy");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < generated_reps.rows(); ++i) {
    const T* r = generated_reps.row(i);
    double rnorm = 0.0;
    for (std::size_t j = 0; j < d; ++j) rnorm += static_cast<double>(r[j]) * static_cast<double>(r[j]);
    rnorm = std::sqrt(rnorm);
    double best = -2.0;
    std::size_t best_c = 0;
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
      double dot = 0.0;
      const T* cr = centroids.row(c);
      for (std::size_t j = 0; j < d; ++j) dot += static_cast<double>(r[j]) * static_cast<double>(cr[j]);
      const double cosine = rnorm > 0.0 ? dot / (rnorm * centroid_norm[c]) : -1.0;
      if (cosine > best) {
        best = cosine;
        best_c = c;
      }
    }
    if (best_c == target_class) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(generated_reps.rows());
}

}  // namespace rcg

#endif  // RCG_METRICS_HPP
