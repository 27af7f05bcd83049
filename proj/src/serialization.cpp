#include "mflr/serialization.hpp"

#include <fstream>

namespace mflr::serialization {

using nlohmann::json;

namespace {

json gen_matrix_to_json(const linalg::GenMatrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

linalg::GenMatrix gen_matrix_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) {
        throw FormatError(std::string(what) + " must be a 2D array");
    }
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].size();
    linalg::GenMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (j[i].size() != cols) throw FormatError(std::string(what) + " rows have mixed sizes");
        for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

}  // namespace

json stats_to_json(const statistics::ModelStats& stats) {
    json j;
    j["K"] = stats.fidelities;
    j["sigma"] = stats.sigma;
    j["rho"] = stats.rho;
    if (stats.has_matrices) {
        json c1k = json::array();
        json ckk = json::array();
        for (std::size_t k = 0; k < stats.fidelities; ++k) {
            c1k.push_back(gen_matrix_to_json(stats.c1k[k]));
            ckk.push_back(gen_matrix_to_json(stats.ckk[k].as_general()));
        }
        j["C1k"] = c1k;
        j["Ckk"] = ckk;
    } else {
        j["C1k"] = nullptr;
        j["Ckk"] = nullptr;
    }
    j["provenance"] = stats.provenance;
    return j;
}

statistics::ModelStats stats_from_json(const json& j) {
    for (const char* key : {"K", "sigma", "rho", "provenance"}) {
        if (!j.contains(key)) throw FormatError("stats document missing key '" +
                                                std::string(key) + "'");
    }
    statistics::ModelStats stats;
    stats.fidelities = j.at("K").get<std::size_t>();
    stats.sigma = j.at("sigma").get<std::vector<double>>();
    stats.rho = j.at("rho").get<std::vector<double>>();
    stats.provenance = j.at("provenance").get<std::string>();
    if (j.contains("C1k") && !j.at("C1k").is_null()) {
        if (!j.contains("Ckk") || j.at("Ckk").is_null()) {
            throw FormatError("stats document has C1k without Ckk");
        }
        stats.has_matrices = true;
        for (std::size_t k = 0; k < stats.fidelities; ++k) {
            stats.c1k.push_back(gen_matrix_from_json(j.at("C1k").at(k), "C1k"));
            stats.ckk.push_back(linalg::SymMatrix::from_general(
                gen_matrix_from_json(j.at("Ckk").at(k), "Ckk"), 1e-9));
        }
    }
    stats.validate();
    return stats;
}

void save_stats(const statistics::ModelStats& stats, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write stats file '" + path + "'");
    out << stats_to_json(stats).dump(2) << "\n";
}

statistics::ModelStats load_stats(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open stats file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError("stats file '" + path + "': " + e.what());
    }
    return stats_from_json(j);
}

json fit_to_json(const estimators::FitResult& fit) {
    json j;
    j["c_xy"] = fit.c_xy_hat.values();
    j["beta"] = fit.beta_hat.values();
    j["strategy"] = coefficients::strategy_name(fit.strategy);
    j["m"] = fit.counts;
    j["cost"] = fit.realized_cost;
    j["seed"] = fit.seed;
    j["standardized_features"] = fit.standardized_features;
    return j;
}

estimators::FitResult fit_from_json(const json& j) {
    estimators::FitResult fit;
    fit.c_xy_hat = linalg::Vector(j.at("c_xy").get<std::vector<double>>());
    fit.beta_hat = linalg::Vector(j.at("beta").get<std::vector<double>>());
    fit.strategy = coefficients::strategy_from_name(j.at("strategy").get<std::string>());
    fit.counts = j.at("m").get<std::vector<std::size_t>>();
    fit.realized_cost = j.at("cost").get<double>();
    fit.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("standardized_features")) {
        fit.standardized_features = j.at("standardized_features").get<bool>();
    }
    return fit;
}

}  // namespace mflr::serialization
