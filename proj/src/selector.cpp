#include "css/selector.hpp"

#include <cmath>

namespace css {

SelectionScores score(const EmbeddingSequence& mix_seq, const SpeakerInventory& inv,
                      bool include_silent_frames) {
    const Eigen::Index t = mix_seq.num_frames();
    const Eigen::Index m = inv.size();
    if (m < 2) throw std::invalid_argument("inventory must have M >= 2");
    if (!include_silent_frames && mix_seq.num_voiced() == 0)
        throw std::runtime_error("all frames silent");
    if (include_silent_frames && t == 0) throw std::runtime_error("empty sequence");

    SelectionScores out;
    out.per_frame = Eigen::MatrixXd::Zero(t, m);
    out.averaged = Eigen::VectorXd::Zero(m);

    Eigen::Index used = 0;
    for (Eigen::Index s = 0; s < t; ++s) {
        const bool silent = mix_seq.silent[static_cast<std::size_t>(s)];
        if (silent && !include_silent_frames) continue;
        Eigen::VectorXd d = inv.profiles * mix_seq.frames.row(s).transpose();
        d.array() -= d.maxCoeff(); // stabilized softmax
        Eigen::VectorXd w = d.array().exp();
        w /= w.sum();
        out.per_frame.row(s) = w.transpose();
        out.averaged += w;
        ++used;
    }
    out.averaged /= static_cast<double>(used);
    return out;
}

SelectedProfiles select_top2(const SelectionScores& scores, const SpeakerInventory& inv) {
    const Eigen::Index m = scores.averaged.size();
    if (m < 2) throw std::invalid_argument("need at least two profiles");

    int p1 = 0, p2 = -1;
    for (Eigen::Index j = 1; j < m; ++j)
        if (scores.averaged[j] > scores.averaged[p1]) p1 = static_cast<int>(j);
    for (Eigen::Index j = 0; j < m; ++j) {
        if (static_cast<int>(j) == p1) continue;
        if (p2 < 0 || scores.averaged[j] > scores.averaged[p2]) p2 = static_cast<int>(j);
    }

    SelectedProfiles sel;
    sel.p1_index = p1;
    sel.p2_index = p2;
    sel.e_p1 = inv.profile(p1);
    sel.e_p2 = inv.profile(p2);
    sel.scores = scores;
    return sel;
}

} // namespace css
