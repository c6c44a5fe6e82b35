#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "pbo/common.hpp"

namespace pbo {

// Feasible box [l, u] in R^n with per-coordinate bounds.
class BoxDomain {
  public:
    BoxDomain(Eigen::VectorXd lower, Eigen::VectorXd upper)
        : lower_(std::move(lower)), upper_(std::move(upper)) {
        if (lower_.size() != upper_.size() || lower_.size() < 1)
            throw InputError("BoxDomain: bounds must have equal length >= 1");
        for (Eigen::Index i = 0; i < lower_.size(); ++i)
            if (!(lower_[i] < upper_[i]))
                throw InputError("BoxDomain: lower[" + std::to_string(i) +
                                 "] must be < upper[" + std::to_string(i) + "]");
    }

    static BoxDomain cube(int n, double lo, double hi) {
        return BoxDomain(Eigen::VectorXd::Constant(n, lo),
                         Eigen::VectorXd::Constant(n, hi));
    }

    static BoxDomain unit(int n) { return cube(n, 0.0, 1.0); }

    int dim() const { return static_cast<int>(lower_.size()); }
    const Eigen::VectorXd& lower() const { return lower_; }
    const Eigen::VectorXd& upper() const { return upper_; }
    Eigen::VectorXd range() const { return upper_ - lower_; }

    bool contains(const Eigen::VectorXd& x, double tol = 0.0) const {
        if (x.size() != lower_.size()) return false;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double slack = tol * (upper_[i] - lower_[i]);
            if (x[i] < lower_[i] - slack || x[i] > upper_[i] + slack) return false;
        }
        return true;
    }

    Eigen::VectorXd clip(const Eigen::VectorXd& x) const {
        return x.cwiseMax(lower_).cwiseMin(upper_);
    }

    // affine map onto [0,1]^n and back; from_unit clips so that round trips
    // never escape the closed box by a final ulp
    Eigen::VectorXd to_unit(const Eigen::VectorXd& x) const {
        return (x - lower_).cwiseQuotient(upper_ - lower_);
    }

    Eigen::VectorXd from_unit(const Eigen::VectorXd& z) const {
        return clip(lower_ + z.cwiseProduct(upper_ - lower_));
    }

    // min_i min(x_i - l_i, u_i - x_i); the boundary-clearance of a point
    double clearance(const Eigen::VectorXd& x) const {
        double c = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < x.size(); ++i)
            c = std::min(c, std::min(x[i] - lower_[i], upper_[i] - x[i]));
        return c;
    }

  private:
    Eigen::VectorXd lower_, upper_;
};

inline Eigen::VectorXd sample_uniform_one(const BoxDomain& domain, Rng& rng) {
    Eigen::VectorXd x(domain.dim());
    for (int i = 0; i < domain.dim(); ++i)
        x[i] = rng.uniform(domain.lower()[i], domain.upper()[i]);
    return x;
}

inline std::vector<Eigen::VectorXd> sample_uniform(const BoxDomain& domain,
                                                   int count, Rng& rng) {
    if (count < 1) throw InputError("sample_uniform: count must be >= 1");
    std::vector<Eigen::VectorXd> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(sample_uniform_one(domain, rng));
    return out;
}

inline std::vector<Eigen::VectorXd> sample_uniform(const BoxDomain& domain,
                                                   int count,
                                                   std::uint64_t seed) {
    Rng rng(seed);
    return sample_uniform(domain, count, rng);
}

}  // namespace pbo
