// Audits an in-process linear model on synthetic data and prints the ranking.

#include <oproj/oproj.hpp>

#include <iostream>

int main()
{
    oproj::SyntheticSpec spec;
    spec.n = 2000;
    spec.coefficients = {4.0, 2.0, 1.0, 0.0};
    spec.noise_sd = 0.1;
    spec.seed = 7;
    const auto data = oproj::generate_synthetic(spec);

    // The "black box": a ridge fit we only ever query through the handle.
    auto model = oproj::surrogate_handle(oproj::fit_ridge(data.X, data.y));

    oproj::AuditConfig cfg;
    const auto report = oproj::rank_all_captured(*model, data.X, cfg);

    std::cout << "baseline mse " << report.baseline << ", " << report.batch_queries << " queries\n";
    for (const auto& e : report.entries)
        std::cout << "  " << e.name << "  " << oproj::score_label(e.normalized) << "  (raw "
                  << e.raw_delta << ")\n";
    oproj::write_report_svg(std::cout, report);
}
