#ifndef CSS_INVENTORY_HPP
#define CSS_INVENTORY_HPP

#include "css/embedder.hpp"
#include "css/simulator.hpp"

#include <cstdint>
#include <variant>
#include <vector>

namespace css {

struct EnrolledProvenance {
    std::vector<int> speaker_ids; // position = profile row
};

struct ClusteredProvenance {
    std::vector<int> cluster_sizes;
    double inertia = 0.0;
};

struct SpeakerInventory {
    Eigen::MatrixXd profiles; // M x K, rows unit-norm
    std::variant<EnrolledProvenance, ClusteredProvenance> provenance;

    Eigen::Index size() const { return profiles.rows(); }
    Embedding profile(Eigen::Index i) const { return Embedding(profiles.row(i).transpose()); }
};

struct KMeansResult {
    Eigen::MatrixXd centroids; // M x K
    std::vector<int> assignments;
    double inertia = 0.0;
    std::vector<double> inertia_history; // one entry per Lloyd iteration
};

// k-means++ init then Lloyd; empty clusters re-seeded to the farthest point.
KMeansResult kmeans(const Eigen::MatrixXd& points, int m, std::uint64_t seed, int max_iter = 100,
                    double tol = 1e-6);

// Lloyd iterations from explicit initial centroids (exposed for testing).
KMeansResult kmeans_lloyd(const Eigen::MatrixXd& points, Eigen::MatrixXd initial_centroids,
                          int max_iter = 100, double tol = 1e-6);

SpeakerInventory build_inventory_from_enrollments(const std::vector<Waveform>& enrollments);

SpeakerInventory build_inventory_self(const Waveform& mixture, int m, std::uint64_t seed);

struct ClusterPurity {
    int cluster = 0;
    int size = 0; // single-speaker chunks assigned to this cluster
    int majority_speaker = -1;
    double purity = 0.0;
};

struct PurityReport {
    std::vector<ClusterPurity> clusters;
    double mean_purity = 0.0; // weighted by cluster size
    int evaluated_chunks = 0; // single-speaker, non-silent chunks only
};

// Diagnostic: per-cluster purity over non-silent single-speaker chunks.
PurityReport purity(const SpeakerInventory& inventory, const SimulatedRecording& recording);

} // namespace css

#endif
