#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stuperf {

struct Provenance {
    std::string dataset_id;
    std::string cluster_id;
    std::string split_name;
    int frozen_count = 0;
    std::uint64_t seed = 0;
};

struct EvalReport {
    double rmse = 0.0;
    double mae = 0.0;
    double r2 = 0.0;
    std::size_t n = 0;
    Provenance provenance;
};

double rmse(const std::vector<double>& y, const std::vector<double>& yhat);
double mae(const std::vector<double>& y, const std::vector<double>& yhat);

/// 1 - SS_res/SS_tot. Requires length >= 2 and nonzero variance in y.
double r2(const std::vector<double>& y, const std::vector<double>& yhat);

EvalReport evaluate(const std::vector<double>& y, const std::vector<double>& yhat,
                    Provenance provenance);

}  // namespace stuperf
