#include "rigidlab/nn_index.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rigidlab {

void NearestNeighborIndex::build(const std::vector<Eigen::Vector3d>& points) {
    if (points.empty()) throw std::invalid_argument("NearestNeighborIndex: no points");
    if (points.size() > std::numeric_limits<std::uint32_t>::max())
        throw std::invalid_argument("NearestNeighborIndex: too many points");
    nodes_.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        nodes_[i] = {points[i], static_cast<std::uint32_t>(i)};
    build_range(0, nodes_.size(), 0);
}

void NearestNeighborIndex::build_range(std::size_t lo, std::size_t hi, int depth) {
    while (hi - lo > 1) {
        const int axis = depth % 3;
        const std::size_t mid = lo + (hi - lo) / 2;
        std::nth_element(nodes_.begin() + lo, nodes_.begin() + mid, nodes_.begin() + hi,
                         [axis](const Entry& a, const Entry& b) { return a.p[axis] < b.p[axis]; });
        // recurse into the smaller half, iterate on the larger
        if (mid - lo <= hi - (mid + 1)) {
            build_range(lo, mid, depth + 1);
            lo = mid + 1;
        } else {
            build_range(mid + 1, hi, depth + 1);
            hi = mid;
        }
        ++depth;
    }
}

void NearestNeighborIndex::search(std::size_t lo, std::size_t hi, int depth,
                                  const Eigen::Vector3d& q, double& best_d2,
                                  std::size_t& best_pos, double limit_d2) const {
    const std::size_t mid = lo + (hi - lo) / 2;
    const double d2 = (nodes_[mid].p - q).squaredNorm();
    if (d2 < best_d2) {
        best_d2 = d2;
        best_pos = mid;
    }
    if (hi - lo == 1) return;

    const int axis = depth % 3;
    const double delta = q[axis] - nodes_[mid].p[axis];
    const bool left_first = delta < 0.0;

    if (left_first) {
        if (mid > lo) search(lo, mid, depth + 1, q, best_d2, best_pos, limit_d2);
        if (mid + 1 < hi && delta * delta < std::min(best_d2, limit_d2))
            search(mid + 1, hi, depth + 1, q, best_d2, best_pos, limit_d2);
    } else {
        if (mid + 1 < hi) search(mid + 1, hi, depth + 1, q, best_d2, best_pos, limit_d2);
        if (mid > lo && delta * delta < std::min(best_d2, limit_d2))
            search(lo, mid, depth + 1, q, best_d2, best_pos, limit_d2);
    }
}

NearestNeighborIndex::Hit NearestNeighborIndex::nearest(const Eigen::Vector3d& q,
                                                        double give_up) const {
    double best_d2 = std::numeric_limits<double>::infinity();
    std::size_t best_pos = npos;
    const double limit_d2 = std::isfinite(give_up)
                                ? give_up * give_up
                                : std::numeric_limits<double>::infinity();
    search(0, nodes_.size(), 0, q, best_d2, best_pos, limit_d2);
    if (best_pos == npos) return {npos, std::numeric_limits<double>::infinity()};
    return {static_cast<std::size_t>(nodes_[best_pos].index), std::sqrt(best_d2)};
}

}  // namespace rigidlab
