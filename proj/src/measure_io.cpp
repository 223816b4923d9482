#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gmt/measure.hpp"
#include "json.hpp"

namespace gmt {

using ojson = nlohmann::ordered_json;

namespace {

Point point_from(const nlohmann::json& arr, int dim) {
    if (!arr.is_array() || static_cast<int>(arr.size()) != dim)
        throw std::invalid_argument("json: coordinate array has wrong length");
    Point p(dim);
    for (int k = 0; k < dim; ++k) {
        if (!arr[static_cast<std::size_t>(k)].is_number()) throw std::invalid_argument("json: non-numeric coordinate");
        p[k] = arr[static_cast<std::size_t>(k)].get<double>();
    }
    return p;
}

ojson point_to(const Point& p) {
    ojson a = ojson::array();
    for (int k = 0; k < p.dim; ++k) a.push_back(p[k]);
    return a;
}

int read_dim(const nlohmann::json& j) {
    if (!j.contains("dim") || !j["dim"].is_number_integer()) throw std::invalid_argument("json: missing integer 'dim'");
    const int dim = j["dim"].get<int>();
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("json: dim must be in [1, 8]");
    return dim;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

DiscreteMeasure measure_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("json: ") + e.what());
    }
    const int dim = read_dim(j);
    if (!j.contains("atoms") || !j["atoms"].is_array()) throw std::invalid_argument("json: missing 'atoms' array");
    std::vector<Point> pos;
    std::vector<double> w;
    for (const auto& a : j["atoms"]) {
        if (!a.contains("x") || !a.contains("w") || !a["w"].is_number())
            throw std::invalid_argument("json: atom needs 'x' and numeric 'w'");
        pos.push_back(point_from(a["x"], dim));
        const double wt = a["w"].get<double>();
        if (!(wt > 0.0)) throw std::invalid_argument("json: atom weights must be positive");
        w.push_back(wt);
    }
    return DiscreteMeasure(dim, pos, w);
}

std::string measure_to_json_text(const DiscreteMeasure& m) {
    ojson j;
    j["dim"] = m.dim();
    ojson atoms = ojson::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
        ojson a;
        a["x"] = point_to(m.position(i));
        a["w"] = m.weight(i);
        atoms.push_back(std::move(a));
    }
    j["atoms"] = std::move(atoms);
    return j.dump() + "\n";
}

DiscreteMeasure load_measure(const std::string& path) { return measure_from_json_text(slurp(path)); }

void save_measure(const DiscreteMeasure& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << measure_to_json_text(m);
}

PolylineMeasure polyline_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("json: ") + e.what());
    }
    const int dim = read_dim(j);
    if (!j.contains("chains") || !j["chains"].is_array()) throw std::invalid_argument("json: missing 'chains' array");
    std::vector<Chain> chains;
    for (const auto& c : j["chains"]) {
        Chain ch;
        for (const auto& v : c.at("vertices")) ch.vertices.push_back(point_from(v, dim));
        for (const auto& d : c.at("density")) ch.density.push_back(d.get<double>());
        chains.push_back(std::move(ch));
    }
    return PolylineMeasure(dim, std::move(chains));
}

std::string polyline_to_json_text(const PolylineMeasure& m) {
    ojson j;
    j["dim"] = m.dim();
    ojson chains = ojson::array();
    for (const auto& ch : m.chains()) {
        ojson c;
        ojson verts = ojson::array();
        for (const auto& v : ch.vertices) verts.push_back(point_to(v));
        c["vertices"] = std::move(verts);
        c["density"] = ch.density;
        chains.push_back(std::move(c));
    }
    j["chains"] = std::move(chains);
    return j.dump() + "\n";
}

}  // namespace gmt
