#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "asymptotics.hpp"
#include "diagnostics.hpp"
#include "errors.hpp"
#include "kernels.hpp"
#include "model.hpp"

namespace mcmcdegen::io {

using json = nlohmann::json;

/// Shortest decimal that round-trips, independent of the C locale.
inline std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ConfigError("cannot parse number '" + std::string(s) + "'");
    }
    return v;
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline json vec_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v[k]);
    return a;
}

inline Vector json_vec(const json& a) {
    Vector v(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) v[static_cast<Eigen::Index>(k)] = a[k].get<double>();
    return v;
}

inline json mat_json(const Matrix& m) {
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
    return a;
}

inline json theta_json(const Theta& t) { return {{"alpha", vec_json(t.alpha)}, {"beta", vec_json(t.beta)}}; }

inline Theta json_theta(const json& j) { return {json_vec(j.at("alpha")), json_vec(j.at("beta"))}; }

/// Stable JSON text: sorted keys (nlohmann default), two-space indent.
inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Dataset

inline std::string dataset_csv(const Dataset& d) {
    std::string s;
    for (int k = 0; k < d.p(); ++k) s += "x" + std::to_string(k + 1) + ",";
    s += "y\n";
    for (int i = 0; i < d.n(); ++i) {
        for (int k = 0; k < d.p(); ++k) s += fmt(d.x(i, k)) + ",";
        s += std::to_string(d.y[i]) + "\n";
    }
    return s;
}

inline json dataset_sidecar(const Dataset& d) {
    json j = {{"n", d.n()}, {"c", d.c}, {"p", d.p()}, {"seed", d.seed}};
    j["theta0"] = d.true_theta ? theta_json(*d.true_theta) : json(nullptr);
    return j;
}

inline void write_dataset(const Dataset& d, const std::filesystem::path& csv_path) {
    write_text(csv_path, dataset_csv(d));
    write_text(std::filesystem::path(csv_path).replace_extension(".json"), dump(dataset_sidecar(d)));
}

inline Dataset read_dataset(const std::filesystem::path& csv_path) {
    const json side = json::parse(read_text(std::filesystem::path(csv_path).replace_extension(".json")));
    Dataset d;
    d.c = side.at("c").get<int>();
    d.seed = side.at("seed").get<std::uint64_t>();
    if (!side.at("theta0").is_null()) d.true_theta = json_theta(side.at("theta0"));
    const int n = side.at("n").get<int>();
    const int p = side.at("p").get<int>();
    std::istringstream in(read_text(csv_path));
    std::string line;
    std::getline(in, line);
    const auto header = split(line);
    if (static_cast<int>(header.size()) != p + 1 || header.back() != "y") {
        throw ConfigError("dataset header does not match the sidecar");
    }
    d.x.resize(n, p);
    d.y.resize(n);
    for (int i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw ConfigError("dataset CSV has fewer rows than the sidecar says");
        const auto f = split(line);
        if (static_cast<int>(f.size()) != p + 1) throw ConfigError("dataset CSV row has the wrong width");
        for (int k = 0; k < p; ++k) d.x(i, k) = parse_double(f[k]);
        d.y[i] = std::stoi(f[p]);
    }
    d.validate();
    return d;
}

// ---------------------------------------------------------------------------
// Chain traces

inline std::string trace_filename(VariantId v, int n, int rep) {
    return to_string(v) + "_n" + std::to_string(n) + "_r" + std::to_string(rep) + ".csv";
}

inline std::string trace_csv(const ChainTrace& t) {
    std::string s = "step";
    for (int k = 2; k <= t.c - 1; ++k) s += ",alpha" + std::to_string(k);
    for (int k = 1; k <= t.p; ++k) s += ",beta" + std::to_string(k);
    s += ",g";
    for (const auto& tr : t.transforms) {
        if (tr.values.cols() == 1) s += "," + to_string(tr.kind);
        else {
            for (Eigen::Index k = 0; k < tr.values.cols(); ++k) s += "," + to_string(tr.kind) + "_" + std::to_string(k + 1);
        }
    }
    s += "\n";
    for (std::size_t i = 0; i < t.params.size(); ++i) {
        const auto& st = t.params[i];
        s += std::to_string(i);
        for (Eigen::Index k = 0; k < st.theta.alpha.size(); ++k) s += "," + fmt(st.theta.alpha[k]);
        for (Eigen::Index k = 0; k < st.theta.beta.size(); ++k) s += "," + fmt(st.theta.beta[k]);
        s += "," + fmt(st.g);
        for (const auto& tr : t.transforms) {
            for (Eigen::Index k = 0; k < tr.values.cols(); ++k) s += "," + fmt(tr.values(static_cast<Eigen::Index>(i), k));
        }
        s += "\n";
    }
    return s;
}

inline json trace_meta(const ChainTrace& t) {
    json tr = json::array();
    for (const auto& s : t.transforms) tr.push_back(to_string(s.kind));
    return {{"variant", to_string(t.variant)}, {"c", t.c},          {"p", t.p},
            {"n", t.meta.n},                   {"m", t.meta.m},      {"seed", t.meta.seed},
            {"stream", t.meta.stream},         {"dataset", t.meta.dataset_ref},
            {"init", t.meta.init_policy},      {"transforms", tr}};
}

inline void write_trace(const ChainTrace& t, const std::filesystem::path& csv_path) {
    write_text(csv_path, trace_csv(t));
    write_text(std::filesystem::path(csv_path).replace_extension(".json"), dump(trace_meta(t)));
}

// ---------------------------------------------------------------------------
// Reference posterior

inline json reference_json(const ReferencePosterior& r) {
    const auto& pv = r.provenance;
    json j = {{"n", r.n},
              {"c", r.c},
              {"p", r.p},
              {"theta_hat", vec_json(r.theta_hat)},
              {"mode", vec_json(r.mode.flat())},
              {"I", mat_json(r.fisher)},
              {"provenance",
               {{"length", pv.length},
                {"burn_in", pv.burn_in},
                {"thin", pv.thin},
                {"seed", pv.seed},
                {"kernel", pv.kernel},
                {"doubled", pv.doubled},
                {"split_warning", pv.split_warning},
                {"split_min_p", pv.split_min_p},
                {"mh_acceptance", pv.mh_acceptance}}}};
    return j;
}

inline void write_reference(const ReferencePosterior& r, const std::filesystem::path& csv_path) {
    std::string s;
    for (int k = 2; k <= r.c - 1; ++k) s += "alpha" + std::to_string(k) + ",";
    for (int k = 1; k <= r.p; ++k) s += "beta" + std::to_string(k) + (k == r.p ? "\n" : ",");
    const Matrix& m = *r.sample;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index k = 0; k < m.cols(); ++k) s += fmt(m(i, k)) + (k + 1 == m.cols() ? "\n" : ",");
    }
    write_text(csv_path, s);
    write_text(std::filesystem::path(csv_path).replace_extension(".json"), dump(reference_json(r)));
}

inline ReferencePosterior read_reference(const std::filesystem::path& csv_path) {
    const json j = json::parse(read_text(std::filesystem::path(csv_path).replace_extension(".json")));
    ReferencePosterior r;
    r.n = j.at("n").get<int>();
    r.c = j.at("c").get<int>();
    r.p = j.at("p").get<int>();
    r.theta_hat = json_vec(j.at("theta_hat"));
    r.mode = Theta::from_flat(json_vec(j.at("mode")), r.c);
    const auto& I = j.at("I");
    if (!I.empty()) {
        r.fisher.resize(static_cast<Eigen::Index>(I.size()), static_cast<Eigen::Index>(I.size()));
        for (std::size_t a = 0; a < I.size(); ++a) r.fisher.row(static_cast<Eigen::Index>(a)) = json_vec(I[a]).transpose();
        r.bvm_cov = r.fisher.inverse() / static_cast<double>(r.n);
    }
    const auto& pv = j.at("provenance");
    r.provenance.length = pv.at("length").get<int>();
    r.provenance.burn_in = pv.at("burn_in").get<int>();
    r.provenance.thin = pv.at("thin").get<int>();
    r.provenance.seed = pv.at("seed").get<std::uint64_t>();
    r.provenance.kernel = pv.at("kernel").get<std::string>();
    r.provenance.doubled = pv.at("doubled").get<bool>();
    r.provenance.split_warning = pv.at("split_warning").get<bool>();
    r.provenance.split_min_p = pv.at("split_min_p").get<double>();
    r.provenance.mh_acceptance = pv.at("mh_acceptance").get<double>();
    std::istringstream in(read_text(csv_path));
    std::string line;
    std::getline(in, line);
    std::vector<Vector> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line);
        Vector v(f.size());
        for (std::size_t k = 0; k < f.size(); ++k) v[static_cast<Eigen::Index>(k)] = parse_double(f[k]);
        rows.push_back(v);
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()), r.c - 2 + r.p);
    for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    r.sample = std::make_shared<const Matrix>(std::move(m));
    return r;
}

// ---------------------------------------------------------------------------
// Reports

inline json report_json(const DiagnosticsReport& r) {
    json est = json::object();
    for (const auto& [k, e] : r.estimates) est[k] = {{"value", e.value}, {"se", e.se}};
    json hats = json::array();
    for (const auto& h : r.theta_hat) hats.push_back(vec_json(h));
    json per = json::object();
    for (const auto& [k, v] : r.per_replication) per[k] = v;
    json notes = json::object();
    for (const auto& [k, v] : r.notes) notes[k] = v;
    return {{"kind", r.kind}, {"variant", r.variant}, {"transform", r.transform}, {"c", r.c},
            {"p", r.p},       {"n", r.n},             {"m", r.m},                 {"R", r.R},
            {"seed", r.seed}, {"estimates", est},     {"per_replication", per},   {"theta_hat", hats},
            {"notes", notes}};
}

inline std::string table1_csv(const std::vector<Table1Point>& points, const std::vector<Table1Label>& labels,
                              const std::string& unlabeled = "inconclusive") {
    std::string s = "variant,c,n,D,se,label\n";
    for (const auto& pt : points) {
        std::string label = unlabeled;
        for (const auto& l : labels) {
            if (l.variant == pt.variant && l.c == pt.c) label = l.label;
        }
        s += pt.variant + "," + std::to_string(pt.c) + "," + std::to_string(pt.n) + "," + fmt(pt.D) + "," +
             fmt(pt.se) + "," + label + "\n";
    }
    return s;
}

} // namespace mcmcdegen::io
