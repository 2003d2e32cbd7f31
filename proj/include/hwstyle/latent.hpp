#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hwstyle/checkpoint.hpp"
#include "hwstyle/trace.hpp"

namespace hwstyle {

struct LatentRow {
  std::string writer_id;
  char letter = 'A';
  Eigen::VectorXd style;
  std::string label;  // empty when the trace carries no annotation
};

struct LatentTable {
  std::vector<LatentRow> rows;

  std::size_t dim() const { return rows.empty() ? 0 : static_cast<std::size_t>(rows.front().style.size()); }
  Eigen::MatrixXd matrix() const;  // one row per latent
  std::vector<std::string> labels() const;
};

/// Style vectors for every trace whose letter is in `letters` (all letters
/// when empty). Labels come from trace.style[label_key]. Traces that cannot
/// be encoded are skipped. Throws DataMismatch on an empty selection and
/// InvalidArgument for a non-autoencoder checkpoint.
LatentTable extract_latents(const Checkpoint& ckpt, const std::vector<Trace>& traces, const std::string& letters,
                            const std::string& label_key = "rotation");

struct PowerIterationConfig {
  double tolerance = 1e-10;
  int max_iterations = 10000;
};

struct Projection2D {
  std::vector<std::array<double, 2>> coords;
  std::array<double, 2> explained{0.0, 0.0};  // fraction of total variance
  std::array<double, 2> eigenvalues{0.0, 0.0};
  Eigen::MatrixXd components;  // dim x 2, unit columns
  Eigen::VectorXd mean;
};

/// Top two principal components of the row-centred data by power
/// iteration with deflation. Each component's largest-magnitude loading is
/// made positive. Throws InvalidArgument for fewer than 3 rows or
/// zero-variance data.
Projection2D pca_project(const Eigen::MatrixXd& data, const PowerIterationConfig& cfg = {});
Projection2D pca_project(const LatentTable& table, const PowerIterationConfig& cfg = {});

struct Clustering {
  std::vector<int> assignment;
  std::vector<std::array<double, 2>> centers;
  double accuracy = 0.0;
};

/// k-means on the 2-D coordinates with farthest-point seeding (first seed:
/// the point farthest from the centroid), then the best one-to-one
/// matching of clusters to labels. Throws InvalidArgument when fewer than
/// two label classes are present.
Clustering cluster_labels(const Projection2D& proj, const std::vector<std::string>& labels, int k = 2);
double separation_score(const Projection2D& proj, const std::vector<std::string>& labels, int k = 2);

/// CSV with header `writer_id,letter,label,u,v`.
void write_latent_csv(std::ostream& out, const LatentTable& table, const Projection2D& proj);

}  // namespace hwstyle
