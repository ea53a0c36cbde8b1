#ifndef CSS_SELECTOR_HPP
#define CSS_SELECTOR_HPP

#include "css/embedder.hpp"
#include "css/inventory.hpp"

namespace css {

struct SelectionScores {
    Eigen::MatrixXd per_frame; // T_y x M softmax weights (silent frames zero)
    Eigen::VectorXd averaged;  // M, sums to 1
};

struct SelectedProfiles {
    int p1_index = 0;
    int p2_index = 1;
    Embedding e_p1;
    Embedding e_p2;
    SelectionScores scores;
};

// Dot-product similarity, row-wise stabilized softmax, mean over frames.
// Silent frames are excluded from the average by default; strict mode
// averages every frame (silent rows get uniform weights).
SelectionScores score(const EmbeddingSequence& mix_seq, const SpeakerInventory& inv,
                      bool include_silent_frames = false);

// Indices of the two largest averaged scores; ties break to the lower index.
SelectedProfiles select_top2(const SelectionScores& scores, const SpeakerInventory& inv);

} // namespace css

#endif
