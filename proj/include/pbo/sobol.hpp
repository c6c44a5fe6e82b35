#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <vector>

#include "pbo/common.hpp"
#include "pbo/normal.hpp"
#include "pbo/sobol_data.hpp"

namespace pbo {

// Gray-code Sobol sequence over (0,1)^dim with an optional seeded random
// digital shift (scrambling). 32-bit direction integers; points are offset by
// half an ulp so that 0 never occurs and the inverse-normal map stays finite.
class SobolSequence {
  public:
    explicit SobolSequence(int dim) : SobolSequence(dim, 0, false) {}

    SobolSequence(int dim, std::uint64_t seed) : SobolSequence(dim, seed, true) {}

    int dim() const { return dim_; }

    // next point of the (shifted) sequence
    Eigen::VectorXd next() {
        Eigen::VectorXd u(dim_);
        for (int d = 0; d < dim_; ++d)
            u[d] = (static_cast<double>(state_[d] ^ shift_[d]) + 0.5) * 0x1.0p-32;
        const std::uint32_t c =
            static_cast<std::uint32_t>(std::countr_zero(~index_));
        for (int d = 0; d < dim_; ++d) state_[d] ^= dirs_[d][c];
        ++index_;
        return u;
    }

    Eigen::MatrixXd draw(int count) {
        Eigen::MatrixXd out(count, dim_);
        for (int i = 0; i < count; ++i) out.row(i) = next();
        return out;
    }

  private:
    SobolSequence(int dim, std::uint64_t seed, bool scramble)
        : dim_(dim), index_(0) {
        if (dim < 1 || dim > detail::kSobolMaxDim)
            throw CapabilityError("SobolSequence: dim must be in [1, " +
                                  std::to_string(detail::kSobolMaxDim) + "]");
        dirs_.assign(dim_, std::vector<std::uint32_t>(kBits, 0));
        for (int d = 0; d < dim_; ++d) init_direction(d);
        state_.assign(dim_, 0);
        shift_.assign(dim_, 0);
        if (scramble) {
            Rng rng(mix_seed(seed, 0x536f626fULL));
            for (int d = 0; d < dim_; ++d)
                shift_[d] = static_cast<std::uint32_t>(rng.raw() >> 32);
        }
    }

    void init_direction(int d) {
        auto& v = dirs_[d];
        if (d == 0) {  // van der Corput
            for (int i = 0; i < kBits; ++i) v[i] = 1u << (kBits - 1 - i);
            return;
        }
        const std::uint32_t poly = detail::kSobolPoly[d];
        const int s = std::bit_width(poly) - 1;
        // middle coefficients a_1..a_{s-1} of the primitive polynomial
        const std::uint32_t a = (poly >> 1) & ((1u << (s - 1)) - 1u);
        for (int i = 0; i < s && i < kBits; ++i)
            v[i] = detail::kSobolMinit[d][i] << (kBits - 1 - i);
        for (int i = s; i < kBits; ++i) {
            v[i] = v[i - s] ^ (v[i - s] >> s);
            for (int k = 1; k < s; ++k)
                if ((a >> (s - 1 - k)) & 1u) v[i] ^= v[i - k];
        }
    }

    static constexpr int kBits = 32;
    int dim_;
    std::uint64_t index_;
    std::vector<std::vector<std::uint32_t>> dirs_;
    std::vector<std::uint32_t> state_;
    std::vector<std::uint32_t> shift_;
};

// count x dim matrix of scrambled-Sobol points pushed through the inverse
// standard-normal CDF; deterministic per seed
inline Eigen::MatrixXd sobol_normal(int dim, int count, std::uint64_t seed) {
    if (count < 1) throw InputError("sobol_normal: count must be >= 1");
    SobolSequence seq(dim, seed);
    Eigen::MatrixXd z(count, dim);
    for (int i = 0; i < count; ++i) {
        const Eigen::VectorXd u = seq.next();
        for (int d = 0; d < dim; ++d) z(i, d) = normal_quantile(u[d]);
    }
    return z;
}

}  // namespace pbo
