#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

#include <Eigen/Dense>

namespace entroflow {

using Eigen::ArrayXd;
using Vec2 = Eigen::Vector2d;

/// Real-valued field on a uniform periodic grid over the unit torus,
/// d in {1,2}, M cells per axis, nodes at x_i = i/M. Periodicity is
/// index arithmetic mod M; there are no ghost cells.
class GridFunction {
public:
    GridFunction() = default;

    GridFunction(int dim, int cells_per_axis, double fill = 0.0)
        : dim_(dim), m_(cells_per_axis) {
        if (dim < 1 || dim > 2) throw std::invalid_argument("GridFunction: dim must be 1 or 2");
        if (cells_per_axis < 3) throw std::invalid_argument("GridFunction: need at least 3 cells per axis");
        values_ = ArrayXd::Constant(flat_size(dim, cells_per_axis), fill);
    }

    static GridFunction from_values(int dim, int cells_per_axis, ArrayXd v) {
        GridFunction g(dim, cells_per_axis);
        if (v.size() != g.values_.size()) throw std::invalid_argument("GridFunction: value size mismatch");
        g.values_ = std::move(v);
        return g;
    }

    /// Samples f at the grid nodes. f receives (x, y); y is 0 in 1D.
    static GridFunction sample(int dim, int cells_per_axis,
                               const std::function<double(double, double)>& f) {
        GridFunction g(dim, cells_per_axis);
        const double h = g.spacing();
        if (dim == 1) {
            for (int i = 0; i < cells_per_axis; ++i) g.values_[i] = f(i * h, 0.0);
        } else {
            for (int iy = 0; iy < cells_per_axis; ++iy)
                for (int ix = 0; ix < cells_per_axis; ++ix)
                    g.values_[static_cast<Eigen::Index>(iy) * cells_per_axis + ix] = f(ix * h, iy * h);
        }
        return g;
    }

    int dim() const { return dim_; }
    int cells_per_axis() const { return m_; }
    double spacing() const { return 1.0 / m_; }
    double cell_volume() const { return dim_ == 1 ? spacing() : spacing() * spacing(); }
    Eigen::Index size() const { return values_.size(); }

    const ArrayXd& values() const { return values_; }
    ArrayXd& values() { return values_; }

    double operator[](Eigen::Index i) const { return values_[i]; }
    double& operator[](Eigen::Index i) { return values_[i]; }

    Eigen::Index index(int ix, int iy = 0) const {
        return dim_ == 1 ? ix : static_cast<Eigen::Index>(iy) * m_ + ix;
    }

    int wrap(int i) const {
        i %= m_;
        return i < 0 ? i + m_ : i;
    }

    double at_wrapped(int ix, int iy = 0) const { return values_[index(wrap(ix), wrap(iy))]; }

    Vec2 node(Eigen::Index flat) const {
        const double h = spacing();
        if (dim_ == 1) return Vec2(flat * h, 0.0);
        return Vec2(static_cast<double>(flat % m_) * h, static_cast<double>(flat / m_) * h);
    }

    double sum() const { return values_.sum(); }
    double mass() const { return cell_volume() * values_.sum(); }
    double mean() const { return values_.mean(); }
    double max_abs() const { return values_.abs().maxCoeff(); }
    bool all_finite() const { return values_.isFinite().all(); }

    /// Discrete L_p norm: (h^d sum |u|^p)^(1/p).
    double lp_norm(double p) const {
        return std::pow(cell_volume() * values_.abs().pow(p).sum(), 1.0 / p);
    }
    double l2_norm() const { return std::sqrt(cell_volume() * values_.square().sum()); }
    double l1_norm() const { return cell_volume() * values_.abs().sum(); }

    bool same_grid(const GridFunction& o) const { return dim_ == o.dim_ && m_ == o.m_; }

private:
    static Eigen::Index flat_size(int dim, int m) {
        return dim == 1 ? m : static_cast<Eigen::Index>(m) * m;
    }

    int dim_ = 1;
    int m_ = 3;
    ArrayXd values_;
};

/// Pointwise clamp of the initial condition to [-n, n].
inline GridFunction truncate_initial(const GridFunction& xi, double n) {
    if (n < 1.0) throw std::invalid_argument("truncate_initial: truncation level must be >= 1");
    GridFunction out = xi;
    out.values() = xi.values().max(-n).min(n);
    return out;
}

}  // namespace entroflow
