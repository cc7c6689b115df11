#include "symmap/json_io.hpp"

#include <fstream>
#include <stdexcept>

namespace symmap {

json matrix_to_json(const CsrMatrix& a) {
    json t = json::array();
    for (const Triplet& e : to_triplets(a)) t.push_back(json::array({e.row, e.col, e.value}));
    return json{{"nrows", a.nrows()}, {"ncols", a.ncols()}, {"triplets", std::move(t)}};
}

CsrMatrix matrix_from_json(const json& j) {
    const auto nrows = j.at("nrows").get<index_t>();
    const auto ncols = j.at("ncols").get<index_t>();
    std::vector<Triplet> t;
    for (const json& e : j.at("triplets")) {
        if (!e.is_array() || e.size() != 3) throw std::invalid_argument("matrix triplet must be [i, j, v]");
        t.push_back({e[0].get<index_t>(), e[1].get<index_t>(), e[2].get<double>()});
    }
    return csr_from_triplets(nrows, ncols, t);
}

json problem_to_json(const ProblemInstance& p) {
    return json{{"family", to_string(p.family)}, {"features", p.features}, {"grid_n", p.grid_n},
                {"seed", p.seed},                {"matrix", matrix_to_json(p.a)}, {"b", p.b}};
}

ProblemInstance problem_from_json(const json& j) {
    ProblemInstance p;
    p.family = parse_family(j.at("family").get<std::string>());
    p.features = j.at("features").get<std::vector<double>>();
    p.grid_n = j.at("grid_n").get<int>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.a = matrix_from_json(j.at("matrix"));
    p.b = j.at("b").get<std::vector<double>>();
    if (p.features.size() != feature_count(p.family))
        throw std::invalid_argument("feature count does not match family " + std::string(to_string(p.family)));
    if (static_cast<std::size_t>(p.a.nrows()) != p.b.size())
        throw std::invalid_argument("right-hand side length does not match the matrix");
    return p;
}

void write_problems_jsonl(const std::string& path, const std::vector<ProblemInstance>& problems) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    for (const ProblemInstance& p : problems) out << problem_to_json(p).dump() << '\n';
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::vector<ProblemInstance> read_problems_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open problem file '" + path + "'");
    std::vector<ProblemInstance> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(problem_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

json precond_to_json(const PrecondConfig& c) {
    json j{{"kind", to_string(c.kind)}};
    switch (c.kind) {
    case PrecondKind::Sor:
        j["omega"] = c.omega;
        j["sweeps"] = c.sweeps;
        break;
    case PrecondKind::Ssor: j["omega"] = c.omega; break;
    case PrecondKind::Amg:
        j["theta"] = c.theta;
        j["smoother"] = to_string(c.smoother);
        if (c.smoother == AmgSmoother::Sor) j["omega"] = c.omega;
        break;
    default: break;
    }
    return j;
}

PrecondConfig precond_from_json(const json& j) {
    PrecondConfig c;
    c.kind = parse_precond_kind(j.at("kind").get<std::string>());
    if (j.contains("omega")) c.omega = j["omega"].get<double>();
    if (j.contains("theta")) c.theta = j["theta"].get<double>();
    if (j.contains("sweeps")) c.sweeps = j["sweeps"].get<int>();
    if (j.contains("smoother")) c.smoother = parse_amg_smoother(j["smoother"].get<std::string>());
    c.validate();
    return c;
}

json expression_to_json(const Expression& e) {
    std::vector<int> ids;
    for (const Token& t : e.tokens) ids.push_back(t.id());
    return json{{"tokens", ids}, {"constants", e.constants}, {"infix", to_infix(e, true)}};
}

Expression expression_from_json(const json& j) {
    Expression e;
    for (int id : j.at("tokens").get<std::vector<int>>()) e.tokens.push_back(Token::from_id(id));
    e.constants = j.at("constants").get<std::vector<double>>();
    if (!e.is_complete()) throw std::invalid_argument("expression token sequence is incomplete");
    if (e.constants.size() != e.placeholder_count())
        throw std::invalid_argument("expression has " + std::to_string(e.placeholder_count()) + " placeholders but " +
                                    std::to_string(e.constants.size()) + " constants");
    return e;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("malformed JSON in '" + path + "': " + e.what());
    }
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
}

} // namespace symmap
