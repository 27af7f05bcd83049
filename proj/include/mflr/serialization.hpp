#pragma once

#include <string>

#include <json.hpp>

#include "mflr/estimators.hpp"
#include "mflr/statistics.hpp"

namespace mflr::serialization {

/// ModelStats document: {K, sigma[], rho[], C1k[][][], Ckk[][][], provenance}.
/// The matrix blocks are arrays of K row-major d x d matrices and are null
/// when the statistics were computed without them.
nlohmann::json stats_to_json(const statistics::ModelStats& stats);
statistics::ModelStats stats_from_json(const nlohmann::json& j);

void save_stats(const statistics::ModelStats& stats, const std::string& path);
statistics::ModelStats load_stats(const std::string& path);

/// FitResult document: {c_xy, beta, strategy, m, cost, seed}.
nlohmann::json fit_to_json(const estimators::FitResult& fit);
estimators::FitResult fit_from_json(const nlohmann::json& j);

}  // namespace mflr::serialization
