#include "css/inventory.hpp"

#include "css/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace css {

namespace {

void assign_points(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
                   std::vector<int>& assignments, double& inertia) {
    inertia = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        double best = std::numeric_limits<double>::max();
        int best_c = 0;
        for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
            const double d = (points.row(i) - centroids.row(c)).squaredNorm();
            if (d < best) { best = d; best_c = static_cast<int>(c); }
        }
        assignments[static_cast<std::size_t>(i)] = best_c;
        inertia += best;
    }
}

Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& points, int m, Rng& rng) {
    const Eigen::Index n = points.rows();
    Eigen::MatrixXd centroids(m, points.cols());
    centroids.row(0) = points.row(static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n)));
    Eigen::VectorXd d2(n);
    for (Eigen::Index i = 0; i < n; ++i)
        d2[i] = (points.row(i) - centroids.row(0)).squaredNorm();
    for (int c = 1; c < m; ++c) {
        const double total = d2.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
            double r = uniform(rng) * total;
            for (Eigen::Index i = 0; i < n; ++i) {
                r -= d2[i];
                if (r <= 0.0) { pick = i; break; }
            }
        } else {
            pick = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n));
        }
        centroids.row(c) = points.row(pick);
        for (Eigen::Index i = 0; i < n; ++i)
            d2[i] = std::min(d2[i], (points.row(i) - centroids.row(c)).squaredNorm());
    }
    return centroids;
}

} // namespace

KMeansResult kmeans_lloyd(const Eigen::MatrixXd& points, Eigen::MatrixXd centroids, int max_iter,
                          double tol) {
    const Eigen::Index n = points.rows();
    const int m = static_cast<int>(centroids.rows());
    if (n < m) throw std::invalid_argument("fewer points than clusters");
    if (!points.allFinite()) throw std::invalid_argument("non-finite points");

    KMeansResult res;
    res.assignments.assign(static_cast<std::size_t>(n), 0);

    for (int iter = 0; iter < max_iter; ++iter) {
        assign_points(points, centroids, res.assignments, res.inertia);
        res.inertia_history.push_back(res.inertia);

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(m, points.cols());
        std::vector<int> counts(static_cast<std::size_t>(m), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(res.assignments[static_cast<std::size_t>(i)]) += points.row(i);
            ++counts[static_cast<std::size_t>(res.assignments[static_cast<std::size_t>(i)])];
        }
        Eigen::MatrixXd next = centroids;
        for (int c = 0; c < m; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                next.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
            } else {
                // re-seed empty cluster to the point farthest from its centroid
                double worst = -1.0;
                Eigen::Index far = 0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double d =
                        (points.row(i) -
                         centroids.row(res.assignments[static_cast<std::size_t>(i)]))
                            .squaredNorm();
                    if (d > worst) { worst = d; far = i; }
                }
                next.row(c) = points.row(far);
            }
        }
        const double movement = (next - centroids).rowwise().norm().maxCoeff();
        centroids = std::move(next);
        if (movement < tol) break;
    }
    assign_points(points, centroids, res.assignments, res.inertia);
    res.centroids = std::move(centroids);
    return res;
}

KMeansResult kmeans(const Eigen::MatrixXd& points, int m, std::uint64_t seed, int max_iter,
                    double tol) {
    if (m < 1) throw std::invalid_argument("cluster count must be >= 1");
    if (points.rows() < m) throw std::invalid_argument("fewer points than clusters");
    Rng rng = make_rng(seed, "kmeans");
    return kmeans_lloyd(points, kmeanspp_init(points, m, rng), max_iter, tol);
}

SpeakerInventory build_inventory_from_enrollments(const std::vector<Waveform>& enrollments) {
    if (enrollments.size() < 2)
        throw std::invalid_argument("need at least 2 enrollments");
    SpeakerInventory inv;
    inv.profiles.resize(static_cast<Eigen::Index>(enrollments.size()), kEmbedDim);
    EnrolledProvenance prov;
    for (std::size_t i = 0; i < enrollments.size(); ++i) {
        EmbeddingSequence seq = embed_frames(enrollments[i]);
        if (seq.num_voiced() == 0)
            throw std::runtime_error("enrollment " + std::to_string(i) + " is silent");
        inv.profiles.row(static_cast<Eigen::Index>(i)) = mean_pool(seq).vector.transpose();
        prov.speaker_ids.push_back(static_cast<int>(i));
    }
    inv.provenance = std::move(prov);
    return inv;
}

SpeakerInventory build_inventory_self(const Waveform& mixture, int m, std::uint64_t seed) {
    if (m < 2) throw std::invalid_argument("inventory needs M >= 2");
    ChunkEmbeddings chunks = chunk_embeddings(mixture);
    const Eigen::Index n = static_cast<Eigen::Index>(chunks.chunks.size());
    if (n < m)
        throw std::runtime_error("too few non-silent chunks: have " + std::to_string(n) +
                                 ", need " + std::to_string(m));

    Eigen::MatrixXd points(n, kEmbedDim);
    for (Eigen::Index i = 0; i < n; ++i)
        points.row(i) = chunks.chunks[static_cast<std::size_t>(i)].second.vector.transpose();

    KMeansResult km = kmeans(points, m, seed);

    SpeakerInventory inv;
    inv.profiles = km.centroids;
    for (Eigen::Index c = 0; c < inv.profiles.rows(); ++c) {
        const double norm = inv.profiles.row(c).norm();
        if (norm > 1e-12) inv.profiles.row(c) /= norm;
    }
    ClusteredProvenance prov;
    prov.cluster_sizes.assign(static_cast<std::size_t>(m), 0);
    for (int a : km.assignments) ++prov.cluster_sizes[static_cast<std::size_t>(a)];
    prov.inertia = km.inertia;
    inv.provenance = std::move(prov);
    return inv;
}

PurityReport purity(const SpeakerInventory& inventory, const SimulatedRecording& recording) {
    ChunkEmbeddings chunks = chunk_embeddings(recording.mixture);

    // (cluster, true speaker) counts over single-speaker chunks
    std::map<std::pair<int, int>, int> counts;
    int evaluated = 0;
    for (const auto& [idx, emb] : chunks.chunks) {
        const double start = idx * kChunkSeconds;
        const double end = start + kChunkSeconds;
        // chunk qualifies if exactly one speaker is active and no overlap occurs
        std::vector<int> active;
        for (const auto& ev : recording.script.events)
            if (ev.onset < end && ev.offset > start &&
                std::find(active.begin(), active.end(), ev.speaker_id) == active.end())
                active.push_back(ev.speaker_id);
        if (active.size() != 1) continue;

        int best_c = 0;
        double best = -2.0;
        for (Eigen::Index c = 0; c < inventory.size(); ++c) {
            const double s = inventory.profiles.row(c).dot(emb.vector.transpose());
            if (s > best) { best = s; best_c = static_cast<int>(c); }
        }
        ++counts[{best_c, active[0]}];
        ++evaluated;
    }

    PurityReport report;
    report.evaluated_chunks = evaluated;
    double weighted = 0.0;
    for (Eigen::Index c = 0; c < inventory.size(); ++c) {
        ClusterPurity cp;
        cp.cluster = static_cast<int>(c);
        int best_count = 0;
        for (const auto& [key, n] : counts) {
            if (key.first != c) continue;
            cp.size += n;
            if (n > best_count) { best_count = n; cp.majority_speaker = key.second; }
        }
        cp.purity = cp.size > 0 ? static_cast<double>(best_count) / cp.size : 1.0;
        weighted += cp.purity * cp.size;
        report.clusters.push_back(cp);
    }
    report.mean_purity = evaluated > 0 ? weighted / evaluated : 0.0;
    return report;
}

} // namespace css
