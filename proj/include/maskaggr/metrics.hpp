#pragma once

#include <span>

#include "maskaggr/masks.hpp"
#include "maskaggr/volume.hpp"

namespace maskaggr {

struct VoiScore {
    // H(seg | gt), nats: over-segmentation.
    double split = 0.0;
    // H(gt | seg), nats: under-segmentation.
    double merge = 0.0;

    double sum() const { return split + merge; }
};

VoiScore voi(const LabelVolume& seg, const LabelVolume& gt);

// 1 - F-score of Rand precision and recall from the contingency table.
double adapted_rand_error(const LabelVolume& seg, const LabelVolume& gt);

// Geometric mean of total VOI and adapted Rand error; 0 for identical partitions.
double cremi_score(const LabelVolume& seg, const LabelVolume& gt);

struct SegmentationReport {
    double voi_split = 0.0;
    double voi_merge = 0.0;
    double arand = 0.0;
    double cremi = 0.0;
};

SegmentationReport evaluate(const LabelVolume& seg, const LabelVolume& gt);

// Fuzzy Sorensen-Dice; two empty masks score 1.
double fuzzy_dice(std::span<const float> p, std::span<const float> t);
double fuzzy_dice(const CentralInstanceMask& p, const CentralInstanceMask& t);

}  // namespace maskaggr
