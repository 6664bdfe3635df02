#include "core/grad/fd_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/common/error.hpp"

namespace asn::grad {

double finite_difference_check(const std::function<Tensor(const Tensor&)>& f,
                               const Tensor& point, double epsilon,
                               const FdOptions& options) {
    if (epsilon <= 0.0) fail(ErrorCode::InvalidArgument, "finite_difference_check: epsilon must be > 0");

    Tensor x = Tensor::from_values(point.shape(), point.values(), true);
    Tensor out = f(x);
    if (out.size() != 1)
        fail(ErrorCode::InvalidArgument, "finite_difference_check: function must return a scalar");
    backward(out);
    const std::vector<double> analytic = x.grad();

    std::vector<std::size_t> coords(point.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coords > 0 && options.max_coords < coords.size()) {
        Rng rng = make_rng(options.seed, "fd-coords");
        std::shuffle(coords.begin(), coords.end(), rng);
        coords.resize(options.max_coords);
    }

    const auto eval = [&](const std::vector<double>& at) {
        Tensor probe = Tensor::from_values(point.shape(), at, false);
        return f(probe).item();
    };

    double worst = 0.0;
    std::vector<double> probe = point.values();
    for (std::size_t c : coords) {
        const double keep = probe[c];
        probe[c] = keep + epsilon;
        const double f_plus = eval(probe);
        probe[c] = keep - epsilon;
        const double f_minus = eval(probe);
        probe[c] = keep;

        const double numeric = (f_plus - f_minus) / (2.0 * epsilon);
        const double a = analytic[c];
        if (std::abs(a - numeric) <= options.abs_guard) continue;
        const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
        worst = std::max(worst, rel);
    }
    return worst;
}

} // namespace asn::grad
