#pragma once

// Derivative-free minimization (GSL nmsimplex2).

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

namespace orthoev {

struct NelderMeadOptions {
    std::size_t max_iter = 5000;
    double size_tol = 1e-9;  // simplex characteristic size at convergence
    double initial_step = 0.5;
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = std::numeric_limits<double>::infinity();
    bool converged = false;
    std::size_t iterations = 0;
};

namespace detail {

struct MinimizeContext {
    const std::function<double(const std::vector<double>&)>* f;
    std::vector<double> buffer;
};

inline double gsl_trampoline(const gsl_vector* v, void* params) {
    auto* ctx = static_cast<MinimizeContext*>(params);
    for (std::size_t k = 0; k < ctx->buffer.size(); ++k) ctx->buffer[k] = gsl_vector_get(v, k);
    const double y = (*ctx->f)(ctx->buffer);
    // GSL's simplex handles large finite values but not inf/nan
    return std::isfinite(y) ? y : std::numeric_limits<double>::max() / 4.0;
}

}  // namespace detail

/// Minimize f from x0. Non-finite values of f are treated as a huge penalty.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    const std::vector<double>& x0,
                                    const NelderMeadOptions& opt = {}) {
    const std::size_t n = x0.size();
    NelderMeadResult res;
    res.x = x0;
    if (n == 0) {
        res.value = f(x0);
        res.converged = true;
        return res;
    }
    gsl_set_error_handler_off();
    detail::MinimizeContext ctx{&f, std::vector<double>(n)};
    gsl_multimin_function fn{&detail::gsl_trampoline, n, &ctx};

    using VecPtr = std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)>;
    VecPtr x(gsl_vector_alloc(n), &gsl_vector_free);
    VecPtr step(gsl_vector_alloc(n), &gsl_vector_free);
    for (std::size_t k = 0; k < n; ++k) {
        gsl_vector_set(x.get(), k, x0[k]);
        gsl_vector_set(step.get(), k, opt.initial_step * std::max(0.1, std::abs(x0[k])));
    }
    std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> s(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n),
        &gsl_multimin_fminimizer_free);
    gsl_multimin_fminimizer_set(s.get(), &fn, x.get(), step.get());

    int status = GSL_CONTINUE;
    std::size_t iter = 0;
    while (status == GSL_CONTINUE && iter < opt.max_iter) {
        ++iter;
        if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
        status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), opt.size_tol);
    }
    for (std::size_t k = 0; k < n; ++k) res.x[k] = gsl_vector_get(s->x, k);
    res.value = f(res.x);
    res.converged = status == GSL_SUCCESS && std::isfinite(res.value);
    res.iterations = iter;
    return res;
}

}  // namespace orthoev
