#pragma once

// Viterbi-style minimisation over a chain of frames. Included by library.h.

namespace stopshop {

template <class PairwiseFn>
Assignment solve_chain(const Eigen::MatrixXd& unary, const std::vector<bool>& active, PairwiseFn&& pairwise) {
    const int n = static_cast<int>(unary.rows());
    const int d = static_cast<int>(unary.cols());
    Assignment labels(n, 0);
    if (n == 0 || d == 0) return labels;

    Eigen::MatrixXd cost(n, d);
    Eigen::MatrixXi back(n, d);
    auto argmin_row = [&](int f) {
        int best = 0;
        for (int k = 1; k < d; ++k) {
            if (cost(f, k) < cost(f, best)) best = k;
        }
        return best;
    };

    int start = 0;
    while (start < n) {
        int end = start;
        while (end + 1 < n && active[end]) ++end;

        cost.row(start) = unary.row(start);
        for (int f = start + 1; f <= end; ++f) {
            const Eigen::MatrixXd pair = pairwise(f - 1);
            for (int b = 0; b < d; ++b) {
                int best = 0;
                double best_cost = cost(f - 1, 0) + pair(0, b);
                for (int a = 1; a < d; ++a) {
                    const double c = cost(f - 1, a) + pair(a, b);
                    if (c < best_cost) {
                        best_cost = c;
                        best = a;
                    }
                }
                cost(f, b) = best_cost + unary(f, b);
                back(f, b) = best;
            }
        }
        labels[end] = argmin_row(end);
        for (int f = end; f > start; --f) labels[f - 1] = back(f, labels[f]);
        start = end + 1;
    }
    return labels;
}

}  // namespace stopshop
