#include "maskaggr/metrics.hpp"

#include <cmath>
#include <map>
#include <unordered_map>

#include "maskaggr/error.hpp"

namespace maskaggr {

namespace {

struct PairHash {
    std::size_t operator()(const std::pair<Label, Label>& p) const
    {
        return std::hash<Label>{}(p.first * 0x9e3779b97f4a7c15ULL ^ p.second);
    }
};

// Sparse contingency table. Sums are taken over ordered maps so floating
// point results do not depend on hash iteration order.
struct Contingency {
    std::map<std::pair<Label, Label>, std::size_t> joint;
    std::map<Label, std::size_t> seg;
    std::map<Label, std::size_t> gt;
    std::size_t n = 0;
};

Contingency contingency(const LabelVolume& seg, const LabelVolume& gt)
{
    if (seg.shape() != gt.shape())
        throw Error(ErrorKind::ShapeMismatch, "segmentation shape " + to_string(seg.shape()) +
                                                  " differs from ground truth " + to_string(gt.shape()));
    std::unordered_map<std::pair<Label, Label>, std::size_t, PairHash> counts;
    for (std::size_t i = 0; i < seg.size(); ++i)
        ++counts[{seg[i], gt[i]}];
    Contingency c;
    c.n = seg.size();
    for (const auto& [key, count] : counts) {
        c.joint[key] = count;
        c.seg[key.first] += count;
        c.gt[key.second] += count;
    }
    return c;
}

double sum_squares(const std::map<Label, std::size_t>& m)
{
    double s = 0.0;
    for (const auto& [label, count] : m)
        s += static_cast<double>(count) * static_cast<double>(count);
    return s;
}

}  // namespace

VoiScore voi(const LabelVolume& seg, const LabelVolume& gt)
{
    const Contingency c = contingency(seg, gt);
    const double n = static_cast<double>(c.n);
    VoiScore out;
    for (const auto& [key, count] : c.joint) {
        const double p = static_cast<double>(count) / n;
        const double ps = static_cast<double>(c.seg.at(key.first)) / n;
        const double pt = static_cast<double>(c.gt.at(key.second)) / n;
        out.split -= p * std::log(p / pt);
        out.merge -= p * std::log(p / ps);
    }
    out.split = std::max(0.0, out.split);
    out.merge = std::max(0.0, out.merge);
    return out;
}

double adapted_rand_error(const LabelVolume& seg, const LabelVolume& gt)
{
    const Contingency c = contingency(seg, gt);
    double joint_sq = 0.0;
    for (const auto& [key, count] : c.joint)
        joint_sq += static_cast<double>(count) * static_cast<double>(count);
    const double precision = joint_sq / sum_squares(c.seg);
    const double recall = joint_sq / sum_squares(c.gt);
    return std::max(0.0, 1.0 - 2.0 * precision * recall / (precision + recall));
}

double cremi_score(const LabelVolume& seg, const LabelVolume& gt)
{
    return std::sqrt(voi(seg, gt).sum() * adapted_rand_error(seg, gt));
}

SegmentationReport evaluate(const LabelVolume& seg, const LabelVolume& gt)
{
    const VoiScore v = voi(seg, gt);
    SegmentationReport r;
    r.voi_split = v.split;
    r.voi_merge = v.merge;
    r.arand = adapted_rand_error(seg, gt);
    r.cremi = std::sqrt(v.sum() * r.arand);
    return r;
}

double fuzzy_dice(std::span<const float> p, std::span<const float> t)
{
    if (p.size() != t.size())
        throw Error(ErrorKind::WindowMismatch, "fuzzy dice needs masks of equal size");
    double inter = 0.0;
    double pp = 0.0;
    double tt = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        inter += static_cast<double>(p[i]) * t[i];
        pp += static_cast<double>(p[i]) * p[i];
        tt += static_cast<double>(t[i]) * t[i];
    }
    if (pp + tt == 0.0)
        return 1.0;
    return 2.0 * inter / (pp + tt);
}

double fuzzy_dice(const CentralInstanceMask& p, const CentralInstanceMask& t)
{
    if (p.window != t.window)
        throw Error(ErrorKind::WindowMismatch, "fuzzy dice needs masks of equal window");
    return fuzzy_dice(std::span<const float>(p.values), std::span<const float>(t.values));
}

}  // namespace maskaggr
