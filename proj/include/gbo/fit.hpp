#pragma once

#include "gbo/errors.hpp"

#include <cmath>
#include <vector>

namespace gbo {

struct LineFit {
    double slope = 0;
    double intercept = 0;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, "line fit needs at least two points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i];
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    require(sxx > 0, "line fit needs distinct abscissae");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    return f;
}

// log-log fit over the middle 80% of the sweep: y ~ C x^slope.
inline LineFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size(), "fit arrays differ in length");
    const std::size_t trim = x.size() / 10;
    std::vector<double> lx, ly;
    for (std::size_t i = trim; i + trim < x.size(); ++i) {
        require(x[i] > 0 && y[i] > 0, "log-log fit needs positive data");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    return least_squares(lx, ly);
}

} // namespace gbo
