#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Core>

namespace rigidlab {

// Exact nearest-neighbor index over 3-d points (median-split kd-tree).
// Robust across the point distributions met here: graph samples spread over
// a surface and chord directions concentrated on great circles, with query
// points that can sit far from the set under badly oriented candidates.
class NearestNeighborIndex {
public:
    NearestNeighborIndex() = default;

    void build(const std::vector<Eigen::Vector3d>& points);

    struct Hit {
        std::size_t index;
        double distance;
    };

    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    // Exact nearest neighbor when its distance is <= give_up; otherwise any
    // value > give_up (possibly infinity) certifying the bound.
    Hit nearest(const Eigen::Vector3d& q,
                double give_up = std::numeric_limits<double>::infinity()) const;

    bool empty() const { return nodes_.empty(); }
    std::size_t size() const { return nodes_.size(); }

private:
    struct Entry {
        Eigen::Vector3d p;
        std::uint32_t index;  // position in the input list
    };

    void build_range(std::size_t lo, std::size_t hi, int depth);
    void search(std::size_t lo, std::size_t hi, int depth, const Eigen::Vector3d& q,
                double& best_d2, std::size_t& best_pos, double limit_d2) const;

    std::vector<Entry> nodes_;  // median-split tree layout: root of [lo, hi) at the middle
};

}  // namespace rigidlab
