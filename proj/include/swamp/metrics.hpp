#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lattice.hpp"
#include "state_evolution.hpp"
#include "util.hpp"

namespace swamp {

// Loss functions and the comparison of empirical per-iteration losses
// against the state-evolution prediction delta * sigma_{t+1}^2.

inline double mse(const SignalField& a, const SignalField& b) {
    if (a.values.size() != b.values.size()) throw ValidationError("mse: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        s += d * d;
    }
    return s / static_cast<double>(a.values.size());
}

enum class Pl2Kind { squared, absolute };

inline double pl2_loss(Pl2Kind kind, const SignalField& estimate, const SignalField& truth) {
    if (estimate.values.size() != truth.values.size())
        throw ValidationError("pl2_loss: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < estimate.values.size(); ++i) {
        const double d = estimate.values[i] - truth.values[i];
        s += kind == Pl2Kind::squared ? d * d : std::fabs(d);
    }
    return s / static_cast<double>(estimate.values.size());
}

struct TrialSummary {
    std::uint64_t seed = 0;
    std::vector<double> losses; // loss of beta^{t+1}, index t = 0..T-1
};

struct ConcentrationRow {
    int t = 0;              // produced estimate beta^{t+1}
    double mean = 0.0;
    double stddev = 0.0;
    double se_pred = 0.0;   // delta * sigma_{t+1}^2
    double rel_dev = 0.0;   // |mean - se_pred| / se_pred
    double frac_in_band = 0.0;
};

struct ConcentrationReport {
    std::vector<ConcentrationRow> rows;
    double band = 0.1; // relative band used for frac_in_band
};

inline ConcentrationReport concentration_report(const std::vector<TrialSummary>& trials,
                                                const SeTrajectory& se, double delta,
                                                double band = 0.1) {
    if (trials.size() < 2) throw ValidationError("concentration_report: need >= 2 trials");
    const std::size_t T = trials[0].losses.size();
    for (const auto& tr : trials)
        if (tr.losses.size() != T)
            throw ValidationError("concentration_report: trial length mismatch");
    if (se.sigma2.size() < T + 1)
        throw ValidationError("concentration_report: SE trajectory too short");
    ConcentrationReport rep;
    rep.band = band;
    for (std::size_t t = 0; t < T; ++t) {
        ConcentrationRow row;
        row.t = static_cast<int>(t);
        std::vector<double> vals(trials.size());
        for (std::size_t j = 0; j < trials.size(); ++j) vals[j] = trials[j].losses[t];
        const double mean = pairwise_sum(vals) / static_cast<double>(vals.size());
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        var /= static_cast<double>(vals.size()); // population stddev
        row.mean = mean;
        row.stddev = std::sqrt(var);
        row.se_pred = delta * se.sigma2[t + 1];
        row.rel_dev = row.se_pred != 0.0 ? std::fabs(mean - row.se_pred) / row.se_pred
                                         : std::fabs(mean);
        int in = 0;
        for (double v : vals)
            if (std::fabs(v - row.se_pred) <= band * std::fabs(row.se_pred)) ++in;
        row.frac_in_band = static_cast<double>(in) / static_cast<double>(vals.size());
        rep.rows.push_back(row);
    }
    return rep;
}

} // namespace swamp
