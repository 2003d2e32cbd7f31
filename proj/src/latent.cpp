#include "hwstyle/latent.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include "hwstyle/error.hpp"
#include "hwstyle/rng.hpp"

namespace hwstyle {

Eigen::MatrixXd LatentTable::matrix() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim()));
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].style.transpose();
  return m;
}

std::vector<std::string> LatentTable::labels() const {
  std::vector<std::string> out;
  for (const auto& r : rows) out.push_back(r.label);
  return out;
}

LatentTable extract_latents(const Checkpoint& ckpt, const std::vector<Trace>& traces, const std::string& letters,
                            const std::string& label_key) {
  const auto* model = std::get_if<StyleAutoencoder>(&ckpt.model);
  if (!model) throw InvalidArgument("latent extraction needs an autoencoder checkpoint");
  LatentTable table;
  for (const auto& t : traces) {
    if (!letters.empty() && letters.find(t.letter) == std::string::npos) continue;
    FrameSequence fs;
    try {
      fs = encode(t, ckpt.quantizer);
    } catch (const InvalidArgument&) {
      continue;
    }
    const auto it = t.style.find(label_key);
    table.rows.push_back({t.writer_id, t.letter, model->encode_style(fs).values,
                          it == t.style.end() ? std::string() : it->second});
  }
  if (table.rows.empty()) throw DataMismatch("no traces match letter filter '" + letters + "'");
  return table;
}

namespace {

// Deterministic start vector with no special alignment to the axes.
Eigen::VectorXd start_vector(Eigen::Index n, std::uint64_t salt) {
  Rng rng(mix_seed(0x9ca, salt));
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(rng, 0.5, 1.5);
  return v.normalized();
}

// Returns (eigenvalue, unit eigenvector) of the dominant eigenpair of the
// symmetric positive semi-definite matrix `a`, orthogonal to `exclude`.
std::pair<double, Eigen::VectorXd> dominant_eigenpair(const Eigen::MatrixXd& a, const Eigen::MatrixXd& exclude,
                                                      const PowerIterationConfig& cfg, std::uint64_t salt) {
  const Eigen::Index n = a.rows();
  auto project_out = [&](Eigen::VectorXd& v) {
    for (Eigen::Index c = 0; c < exclude.cols(); ++c) v -= exclude.col(c).dot(v) * exclude.col(c);
  };
  Eigen::VectorXd v = start_vector(n, salt);
  project_out(v);
  if (v.norm() == 0.0) v = Eigen::VectorXd::Unit(n, 0);
  v.normalize();
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
  for (int it = 0; it < cfg.max_iterations; ++it) {
    Eigen::VectorXd w = a * v;
    project_out(w);
    const double norm = w.norm();
    if (norm <= 1e-14 * scale) {
      // Remaining spectrum is numerically zero; any orthogonal unit vector
      // is an eigenvector.
      return {0.0, v};
    }
    w /= norm;
    const double diff = std::min((w - v).norm(), (w + v).norm());
    v = w;
    if (diff < cfg.tolerance) break;
  }
  return {std::max(0.0, v.dot(a * v)), v};
}

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index idx = 0;
  v.cwiseAbs().maxCoeff(&idx);
  if (v(idx) < 0.0) v = -v;
}

}  // namespace

Projection2D pca_project(const Eigen::MatrixXd& data, const PowerIterationConfig& cfg) {
  if (data.rows() < 3) throw InvalidArgument("PCA needs at least 3 rows");
  if (data.cols() < 1) throw InvalidArgument("PCA needs at least one column");
  Projection2D p;
  p.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centred = data.rowwise() - p.mean.transpose();
  const Eigen::MatrixXd cov = (centred.transpose() * centred) / static_cast<double>(data.rows() - 1);
  const double total = cov.trace();
  if (!(total > 0.0)) throw InvalidArgument("PCA: data has zero variance");

  p.components = Eigen::MatrixXd::Zero(data.cols(), 2);
  const Eigen::Index k = std::min<Eigen::Index>(2, data.cols());
  for (Eigen::Index c = 0; c < k; ++c) {
    auto [lambda, vec] = dominant_eigenpair(cov, p.components.leftCols(c), cfg, static_cast<std::uint64_t>(c));
    fix_sign(vec);
    p.components.col(c) = vec;
    p.eigenvalues[static_cast<std::size_t>(c)] = lambda;
    p.explained[static_cast<std::size_t>(c)] = std::clamp(lambda / total, 0.0, 1.0);
  }
  const Eigen::MatrixXd proj = centred * p.components;
  for (Eigen::Index i = 0; i < proj.rows(); ++i) p.coords.push_back({proj(i, 0), proj(i, 1)});
  return p;
}

Projection2D pca_project(const LatentTable& table, const PowerIterationConfig& cfg) {
  return pca_project(table.matrix(), cfg);
}

namespace {

double sq_dist(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  return (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]);
}

// Best one-to-one cluster -> label matching by exhaustive search over
// permutations of the larger side (k and label counts are small).
std::size_t best_matching(const std::vector<std::vector<std::size_t>>& counts, std::size_t n_labels) {
  const std::size_t k = counts.size();
  const std::size_t m = std::max(k, n_labels);
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t agree = 0;
    for (std::size_t c = 0; c < k; ++c) {
      if (perm[c] < n_labels) agree += counts[c][perm[c]];
    }
    best = std::max(best, agree);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

Clustering cluster_labels(const Projection2D& proj, const std::vector<std::string>& labels, int k) {
  const std::size_t n = proj.coords.size();
  if (labels.size() != n) throw InvalidArgument("separation: one label per projected row required");
  if (k < 1 || k > 8) throw InvalidArgument("separation: k must be in [1, 8]");
  std::vector<std::string> classes(labels);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw InvalidArgument("separation: at least two label classes are required");
  if (classes.size() > 8) throw InvalidArgument("separation: at most 8 label classes are supported");

  const auto& pts = proj.coords;
  std::array<double, 2> centroid{0.0, 0.0};
  for (const auto& p : pts) {
    centroid[0] += p[0] / static_cast<double>(n);
    centroid[1] += p[1] / static_cast<double>(n);
  }

  Clustering out;
  auto farthest_from = [&](auto&& dist) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = dist(pts[i]);
      if (d > best) {
        best = d;
        arg = i;
      }
    }
    return arg;
  };
  out.centers.push_back(pts[farthest_from([&](const auto& p) { return sq_dist(p, centroid); })]);
  while (out.centers.size() < static_cast<std::size_t>(k)) {
    out.centers.push_back(pts[farthest_from([&](const auto& p) {
      double d = std::numeric_limits<double>::infinity();
      for (const auto& c : out.centers) d = std::min(d, sq_dist(p, c));
      return d;
    })]);
  }

  out.assignment.assign(n, -1);
  for (int iter = 0; iter < 1000; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int arg = 0;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < out.centers.size(); ++c) {
        const double d = sq_dist(pts[i], out.centers[c]);
        if (d < best) {
          best = d;
          arg = static_cast<int>(c);
        }
      }
      if (out.assignment[i] != arg) {
        out.assignment[i] = arg;
        changed = true;
      }
    }
    if (!changed) break;
    for (std::size_t c = 0; c < out.centers.size(); ++c) {
      std::array<double, 2> sum{0.0, 0.0};
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (out.assignment[i] != static_cast<int>(c)) continue;
        sum[0] += pts[i][0];
        sum[1] += pts[i][1];
        ++count;
      }
      if (count > 0) out.centers[c] = {sum[0] / static_cast<double>(count), sum[1] / static_cast<double>(count)};
    }
  }

  std::vector<std::vector<std::size_t>> counts(out.centers.size(), std::vector<std::size_t>(classes.size(), 0));
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin());
    ++counts[static_cast<std::size_t>(out.assignment[i])][label];
  }
  out.accuracy = static_cast<double>(best_matching(counts, classes.size())) / static_cast<double>(n);
  return out;
}

double separation_score(const Projection2D& proj, const std::vector<std::string>& labels, int k) {
  return cluster_labels(proj, labels, k).accuracy;
}

void write_latent_csv(std::ostream& out, const LatentTable& table, const Projection2D& proj) {
  if (proj.coords.size() != table.rows.size()) throw InvalidArgument("latent CSV: row count mismatch");
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  out << "writer_id,letter,label,u,v\n";
  out.precision(17);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    out << quote(r.writer_id) << ',' << r.letter << ',' << quote(r.label) << ',' << proj.coords[i][0] << ','
        << proj.coords[i][1] << '\n';
  }
}

}  // namespace hwstyle
