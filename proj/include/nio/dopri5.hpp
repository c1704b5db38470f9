#pragma once

// Dormand-Prince 5(4) embedded pair with the 4th-order continuous extension of
// Hairer, Norsett & Wanner (dopri5, contd5). Fixed-size Eigen states.

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

namespace nio {

template <typename Scalar, int N>
class Dopri5 {
public:
    using State = Eigen::Matrix<Scalar, N, 1>;

    /// Dense output of the last attempted step, valid for u in [0, 1].
    class Dense {
    public:
        State operator()(Scalar u) const {
            const Scalar w = 1 - u;
            return r1_ + u * (r2_ + w * (r3_ + u * (r4_ + w * r5_)));
        }

    private:
        friend class Dopri5;
        State r1_, r2_, r3_, r4_, r5_;
    };

    struct Trial {
        State y;
        Scalar error_norm;
    };

    Dopri5(Scalar rel_tol, Scalar abs_tol) : rel_tol_(rel_tol), abs_tol_(abs_tol) {}

    /// Attempts one step of size h from (t, y). Stage 1 reuses the FSAL
    /// derivative when `k1` is supplied by the caller.
    template <typename Rhs>
    Trial attempt(Rhs&& rhs, Scalar t, const State& y, const State& k1, Scalar h) {
        k_[0] = k1;
        k_[1] = rhs(t + c2 * h, State(y + h * (a21 * k_[0])));
        k_[2] = rhs(t + c3 * h, State(y + h * (a31 * k_[0] + a32 * k_[1])));
        k_[3] = rhs(t + c4 * h, State(y + h * (a41 * k_[0] + a42 * k_[1] + a43 * k_[2])));
        k_[4] = rhs(t + c5 * h,
                    State(y + h * (a51 * k_[0] + a52 * k_[1] + a53 * k_[2] + a54 * k_[3])));
        k_[5] = rhs(t + h, State(y + h * (a61 * k_[0] + a62 * k_[1] + a63 * k_[2] +
                                          a64 * k_[3] + a65 * k_[4])));
        const State y1 =
            y + h * (a71 * k_[0] + a73 * k_[2] + a74 * k_[3] + a75 * k_[4] + a76 * k_[5]);
        k_[6] = rhs(t + h, y1);

        const State err = h * (e1 * k_[0] + e3 * k_[2] + e4 * k_[3] + e5 * k_[4] +
                               e6 * k_[5] + e7 * k_[6]);
        const State scale =
            (abs_tol_ + rel_tol_ * y.cwiseAbs().cwiseMax(y1.cwiseAbs()).array()).matrix();
        const Scalar norm = std::sqrt((err.array() / scale.array()).square().mean());

        dense_.r1_ = y;
        dense_.r2_ = y1 - y;
        dense_.r3_ = h * k_[0] - dense_.r2_;
        dense_.r4_ = dense_.r2_ - h * k_[6] - dense_.r3_;
        dense_.r5_ = h * (d1 * k_[0] + d3 * k_[2] + d4 * k_[3] + d5 * k_[4] + d6 * k_[5] +
                          d7 * k_[6]);
        return {y1, norm};
    }

    /// Derivative at the end of the last attempted step (first-same-as-last).
    const State& last_derivative() const { return k_[6]; }
    const Dense& dense() const { return dense_; }

    /// Step size proposal after a trial with the given error norm.
    static Scalar next_step(Scalar h, Scalar error_norm) {
        if (!(error_norm > 0)) return h * 5;
        const Scalar factor = Scalar(0.9) * std::pow(error_norm, Scalar(-0.2));
        return h * std::clamp(factor, Scalar(0.2), Scalar(5));
    }

private:
    static constexpr Scalar c2 = Scalar(1) / 5, c3 = Scalar(3) / 10, c4 = Scalar(4) / 5,
                            c5 = Scalar(8) / 9;
    static constexpr Scalar a21 = Scalar(1) / 5;
    static constexpr Scalar a31 = Scalar(3) / 40, a32 = Scalar(9) / 40;
    static constexpr Scalar a41 = Scalar(44) / 45, a42 = Scalar(-56) / 15, a43 = Scalar(32) / 9;
    static constexpr Scalar a51 = Scalar(19372) / 6561, a52 = Scalar(-25360) / 2187,
                            a53 = Scalar(64448) / 6561, a54 = Scalar(-212) / 729;
    static constexpr Scalar a61 = Scalar(9017) / 3168, a62 = Scalar(-355) / 33,
                            a63 = Scalar(46732) / 5247, a64 = Scalar(49) / 176,
                            a65 = Scalar(-5103) / 18656;
    static constexpr Scalar a71 = Scalar(35) / 384, a73 = Scalar(500) / 1113,
                            a74 = Scalar(125) / 192, a75 = Scalar(-2187) / 6784,
                            a76 = Scalar(11) / 84;
    static constexpr Scalar e1 = Scalar(71) / 57600, e3 = Scalar(-71) / 16695,
                            e4 = Scalar(71) / 1920, e5 = Scalar(-17253) / 339200,
                            e6 = Scalar(22) / 525, e7 = Scalar(-1) / 40;
    static constexpr Scalar d1 = Scalar(-12715105075.0) / Scalar(11282082432.0),
                            d3 = Scalar(87487479700.0) / Scalar(32700410799.0),
                            d4 = Scalar(-10690763975.0) / Scalar(1880347072.0),
                            d5 = Scalar(701980252875.0) / Scalar(199316789632.0),
                            d6 = Scalar(-1453857185.0) / Scalar(822651844.0),
                            d7 = Scalar(69997945.0) / Scalar(29380423.0);

    Scalar rel_tol_;
    Scalar abs_tol_;
    State k_[7];
    Dense dense_;
};

}  // namespace nio
