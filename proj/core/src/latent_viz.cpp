// SPDX-License-Identifier: Apache-2.0
#include "scvae/latent_viz.hpp"

#include <cmath>
#include <fstream>
#include <map>

namespace scvae::viz {
namespace {

constexpr std::size_t kMaxIterations = 20000;

void orthogonalize(Eigen::VectorXd& v, const Eigen::MatrixXd& basis, Eigen::Index count) {
  for (Eigen::Index j = 0; j < count; ++j) v -= basis.col(j).dot(v) * basis.col(j);
}

void fix_sign(Eigen::VectorXd& v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v(arg) < 0) v = -v;
}

// Any unit vector orthogonal to the first `count` columns.
Eigen::VectorXd complement(const Eigen::MatrixXd& basis, Eigen::Index count) {
  for (Eigen::Index i = 0; i < basis.rows(); ++i) {
    Eigen::VectorXd v = Eigen::VectorXd::Unit(basis.rows(), i);
    orthogonalize(v, basis, count);
    orthogonalize(v, basis, count);
    if (v.norm() > 1e-6) return v.normalized();
  }
  throw DegenerateDataError("pca: no orthogonal direction left");
}

}  // namespace

LatentSet collect_latents(const training::Checkpoint& ckpt, const std::vector<corpus::Example>& examples) {
  if (ckpt.model.kind() != nets::ModelKind::kScvae) throw std::invalid_argument("latents need an SCVAE checkpoint");
  ad::NoGradGuard no_grad;
  const std::size_t Z = ckpt.model.dims().latent;
  LatentSet out;
  out.z.resize(static_cast<Eigen::Index>(examples.size()), static_cast<Eigen::Index>(Z));
  constexpr std::size_t kBatch = 64;
  std::vector<const corpus::Example*> ptrs;
  for (const auto& e : examples) ptrs.push_back(&e);
  for (std::size_t start = 0; start < ptrs.size(); start += kBatch) {
    const std::size_t end = std::min(ptrs.size(), start + kBatch);
    const auto batch = nets::make_batch(std::span<const corpus::Example* const>(ptrs).subspan(start, end - start),
                                        ckpt.vocabulary, ckpt.inventories);
    const auto post = ckpt.model.recognition(ckpt.model.encode(batch), ad::Node::constant(batch.condition));
    out.z.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(end - start)) = post.mean.value().mat();
  }
  for (const auto& e : examples) {
    out.domains.emplace_back(e.sr.domain ? corpus::domain_name(*e.sr.domain) : "unknown");
    out.acts.push_back(e.sr.act);
  }
  return out;
}

Pca pca_project(const Eigen::MatrixXd& data, std::size_t k) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  const auto K = static_cast<Eigen::Index>(k);
  if (n < 2) throw DegenerateDataError("pca: need at least 2 points");
  if (K < 1 || K > d) throw std::invalid_argument("pca: k must be in 1..columns");
  if (!data.allFinite()) throw DegenerateDataError("pca: non-finite input");

  Pca out;
  out.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - out.mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  const double scale = cov.trace();
  if (!(scale > 1e-12 * std::max(1.0, data.cwiseAbs().maxCoeff()))) throw DegenerateDataError("pca: rank-0 data");

  out.components.resize(d, K);
  out.explained_variance.resize(K);
  for (Eigen::Index c = 0; c < K; ++c) {
    // Start from the heaviest column of the deflated matrix.
    Eigen::Index start = 0;
    cov.colwise().norm().maxCoeff(&start);
    Eigen::VectorXd v = cov.col(start);
    orthogonalize(v, out.components, c);
    double lambda = 0.0;
    if (v.norm() <= 1e-12 * scale) {
      v = complement(out.components, c);
    } else {
      v.normalize();
      for (std::size_t it = 0; it < kMaxIterations; ++it) {
        Eigen::VectorXd next = cov * v;
        orthogonalize(next, out.components, c);
        const double norm = next.norm();
        if (norm <= 1e-12 * scale) break;
        next /= norm;
        if (next.dot(v) < 0) next = -next;
        const double delta = (next - v).norm();
        v = next;
        if (delta < kPcaTolerance) break;
      }
      lambda = v.dot(cov * v);
    }
    fix_sign(v);
    out.components.col(c) = v;
    out.explained_variance(c) = std::max(lambda, 0.0);
    cov -= lambda * v * v.transpose();
  }
  out.projected = centered * out.components;
  return out;
}

std::vector<ProjectedPoint> project_latents(const LatentSet& latents, const Pca& pca) {
  if (pca.projected.rows() != latents.z.rows() || pca.projected.cols() < 2)
    throw std::invalid_argument("projection does not match latents");
  std::vector<ProjectedPoint> out;
  for (Eigen::Index i = 0; i < pca.projected.rows(); ++i)
    out.push_back({pca.projected(i, 0), pca.projected(i, 1), latents.domains[static_cast<std::size_t>(i)],
                   latents.acts[static_cast<std::size_t>(i)]});
  return out;
}

void export_projection(const std::vector<ProjectedPoint>& points, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "x,y,domain,act\n";
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw std::runtime_error("non-finite projected point");
    out << p.x << ',' << p.y << ',' << p.domain << ',' << p.act << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

ClusterStats domain_cluster_stats(const std::vector<ProjectedPoint>& points) {
  std::map<std::string, std::vector<const ProjectedPoint*>> by_domain;
  for (const auto& p : points) by_domain[p.domain].push_back(&p);
  if (by_domain.size() < 2) throw std::invalid_argument("cluster stats need at least 2 domains");
  std::vector<Eigen::Vector2d> centroids;
  ClusterStats s;
  for (const auto& [domain, members] : by_domain) {
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (const auto* p : members) c += Eigen::Vector2d(p->x, p->y);
    c /= static_cast<double>(members.size());
    centroids.push_back(c);
    for (const auto* p : members) s.intra_spread += (Eigen::Vector2d(p->x, p->y) - c).norm();
  }
  s.intra_spread /= static_cast<double>(points.size());
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < centroids.size(); ++i)
    for (std::size_t j = i + 1; j < centroids.size(); ++j, ++pairs) s.inter_centroid += (centroids[i] - centroids[j]).norm();
  s.inter_centroid /= static_cast<double>(pairs);
  return s;
}

}  // namespace scvae::viz
