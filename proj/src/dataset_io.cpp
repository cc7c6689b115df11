#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "symmap/datagen.hpp"

namespace symmap {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw std::runtime_error(path + ":" + std::to_string(line) + ": not a number: '" + s + "'");
    return v;
}

} // namespace

std::string dataset_meta_path(const std::string& csv_path) { return csv_path + ".meta.json"; }

void write_dataset_csv(const std::string& path, const ParamDataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    const std::size_t d = ds.feature_dim();
    const std::size_t t = ds.target_dim();
    for (std::size_t k = 0; k < d; ++k) out << 'x' << (k + 1) << ',';
    out << 'y';
    for (std::size_t k = 1; k < t; ++k) out << ",y" << (k + 1);
    out << ",objective_value\n";
    for (const DatasetRow& r : ds.rows) {
        for (double v : r.features) out << fmt17(v) << ',';
        for (std::size_t k = 0; k < r.targets.size(); ++k) out << (k ? "," : "") << fmt17(r.targets[k]);
        out << ',' << fmt17(r.objective_value) << '\n';
    }
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

void write_dataset(const std::string& csv_path, const ParamDataset& ds) {
    write_dataset_csv(csv_path, ds);
    nlohmann::ordered_json meta;
    meta["family"] = ds.family;
    meta["precond"] = ds.precond;
    meta["objective"] = ds.objective;
    meta["search"] = ds.search;
    meta["seed"] = ds.seed;
    meta["feature_names"] = ds.feature_names;
    meta["n"] = ds.rows.size();
    meta["train"] = ds.train;
    meta["test"] = ds.test;
    meta["log"] = ds.log;
    std::ofstream out(dataset_meta_path(csv_path), std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + dataset_meta_path(csv_path) + "' for writing");
    out << meta.dump(2) << '\n';
}

ParamDataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty dataset file");
    const auto header = split_csv_line(line);
    std::size_t d = 0;
    while (d < header.size() && header[d] == "x" + std::to_string(d + 1)) ++d;
    std::size_t t = 0;
    if (d < header.size() && header[d] == "y") {
        t = 1;
        while (d + t < header.size() && header[d + t] == "y" + std::to_string(t + 1)) ++t;
    }
    if (t == 0 || d + t + 1 != header.size() || header.back() != "objective_value")
        throw std::runtime_error(path + ": expected header x1..xd,y[,y2],objective_value");

    ParamDataset ds;
    for (std::size_t k = 0; k < d; ++k) ds.feature_names.push_back("x" + std::to_string(k + 1));
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(header.size()) + " columns");
        DatasetRow r;
        for (std::size_t k = 0; k < d; ++k) r.features.push_back(parse_double(cells[k], path, lineno));
        for (std::size_t k = 0; k < t; ++k) r.targets.push_back(parse_double(cells[d + k], path, lineno));
        r.objective_value = parse_double(cells.back(), path, lineno);
        ds.rows.push_back(std::move(r));
    }
    for (std::size_t i = 0; i < ds.rows.size(); ++i) ds.train.push_back(i);
    return ds;
}

ParamDataset read_dataset(const std::string& csv_path) {
    ParamDataset ds = read_dataset_csv(csv_path);
    std::ifstream in(dataset_meta_path(csv_path), std::ios::binary);
    if (!in) return ds;
    nlohmann::json meta;
    try {
        in >> meta;
        ds.family = meta.value("family", "");
        ds.precond = meta.value("precond", "");
        ds.objective = meta.value("objective", "");
        ds.search = meta.value("search", "");
        ds.seed = meta.value("seed", std::uint64_t{0});
        if (meta.contains("feature_names")) {
            auto names = meta["feature_names"].get<std::vector<std::string>>();
            if (names.size() == ds.feature_dim()) ds.feature_names = std::move(names);
        }
        if (meta.contains("log")) ds.log = meta["log"].get<std::vector<std::string>>();
        ds.train = meta.at("train").get<std::vector<std::size_t>>();
        ds.test = meta.at("test").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(dataset_meta_path(csv_path) + ": " + e.what());
    }
    for (std::size_t i : ds.train)
        if (i >= ds.rows.size()) throw std::runtime_error(dataset_meta_path(csv_path) + ": split index out of range");
    for (std::size_t i : ds.test)
        if (i >= ds.rows.size()) throw std::runtime_error(dataset_meta_path(csv_path) + ": split index out of range");
    return ds;
}

} // namespace symmap
