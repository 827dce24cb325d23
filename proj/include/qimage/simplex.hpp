#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "qimage/errors.hpp"

namespace qimage {

/// Point on the probability simplex: d >= 2 non-negative coordinates summing to 1.
class SimplexPoint {
public:
    static constexpr double kSumTolerance = 1e-12;

    explicit SimplexPoint(std::vector<double> coords) : coords_(std::move(coords)) {
        if (coords_.size() < 2) throw ValidationError("SimplexPoint: need at least 2 coordinates");
        double sum = 0.0;
        for (double c : coords_) {
            if (!std::isfinite(c) || c < 0.0) throw ValidationError("SimplexPoint: coordinates must be finite and >= 0");
            sum += c;
        }
        if (std::abs(sum - 1.0) > kSumTolerance)
            throw ValidationError("SimplexPoint: coordinates sum to " + std::to_string(sum) + ", not 1");
    }

    /// Accepts weights summing to 1 within `tolerance` and rescales them exactly.
    static SimplexPoint rescaled(std::vector<double> weights, double tolerance) {
        double sum = 0.0;
        for (double w : weights) sum += w;
        if (!(std::abs(sum - 1.0) <= tolerance))
            throw ConsistencyError("weights sum to " + std::to_string(sum) + ", outside tolerance of 1");
        for (auto& w : weights) w /= sum;
        return SimplexPoint(std::move(weights));
    }

    [[nodiscard]] std::size_t dim() const { return coords_.size(); }
    [[nodiscard]] std::span<const double> coords() const { return coords_; }
    [[nodiscard]] double operator[](std::size_t k) const { return coords_[k]; }

    friend bool operator==(const SimplexPoint&, const SimplexPoint&) = default;

private:
    std::vector<double> coords_;
};

}  // namespace qimage
