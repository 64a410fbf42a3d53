#include "spdcwg/materials.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include <json.hpp>

#include "spdcwg/error.hpp"

namespace spdcwg {

using nlohmann::json;

OpticalAxis axis_from_string(const std::string& s) {
    if (s == "isotropic") return OpticalAxis::isotropic;
    if (s == "ordinary") return OpticalAxis::ordinary;
    if (s == "extraordinary") return OpticalAxis::extraordinary;
    raise(Errc::BadConfig, "unknown optical axis '" + s + "'");
}

const char* axis_name(OpticalAxis axis) {
    switch (axis) {
        case OpticalAxis::isotropic: return "isotropic";
        case OpticalAxis::ordinary: return "ordinary";
        case OpticalAxis::extraordinary: return "extraordinary";
    }
    return "?";
}

const char* errc_name(Errc code) {
    switch (code) {
        case Errc::UnknownMaterial: return "UnknownMaterial";
        case Errc::WavelengthOutOfRange: return "WavelengthOutOfRange";
        case Errc::NoGuidedMode: return "NoGuidedMode";
        case Errc::RootRefinementFailure: return "RootRefinementFailure";
        case Errc::EIMBreakdown: return "EIMBreakdown";
        case Errc::BranchAmbiguity: return "BranchAmbiguity";
        case Errc::NoAnticrossing: return "NoAnticrossing";
        case Errc::GridMismatch: return "GridMismatch";
        case Errc::MissingChi2: return "MissingChi2";
        case Errc::FrequencyOutOfRange: return "FrequencyOutOfRange";
        case Errc::EmptySupport: return "EmptySupport";
        case Errc::NotTwoDimensional: return "NotTwoDimensional";
        case Errc::NotOneDimensional: return "NotOneDimensional";
        case Errc::AllPointsFailed: return "AllPointsFailed";
        case Errc::BadConfig: return "BadConfig";
    }
    return "Error";
}

DispersionModel DispersionModel::sellmeier(std::string name, double offset,
                                           std::vector<std::array<double, 2>> terms,
                                           double lambda_min_um, double lambda_max_um) {
    DispersionModel m;
    m.name_ = std::move(name);
    m.form_ = DispersionForm::sellmeier;
    m.offset_ = offset;
    m.terms_ = std::move(terms);
    m.lambda_min_ = lambda_min_um;
    m.lambda_max_ = lambda_max_um;
    return m;
}

DispersionModel DispersionModel::cauchy(std::string name, std::vector<double> coefficients,
                                        double lambda_min_um, double lambda_max_um) {
    DispersionModel m;
    m.name_ = std::move(name);
    m.form_ = DispersionForm::cauchy;
    m.coefficients_ = std::move(coefficients);
    m.lambda_min_ = lambda_min_um;
    m.lambda_max_ = lambda_max_um;
    return m;
}

DispersionModel DispersionModel::tabulated(std::string name, std::vector<double> lambda_um,
                                           std::vector<double> n,
                                           double lambda_min_um, double lambda_max_um) {
    DispersionModel m;
    m.name_ = std::move(name);
    m.form_ = DispersionForm::tabulated;
    m.table_ = CubicSpline(std::move(lambda_um), std::move(n));
    m.lambda_min_ = lambda_min_um;
    m.lambda_max_ = lambda_max_um;
    return m;
}

double DispersionModel::operator()(double lambda_um) const {
    if (!(lambda_um >= lambda_min_ && lambda_um <= lambda_max_)) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s: lambda = %.6g um outside valid range [%.6g, %.6g]",
                      name_.c_str(), lambda_um, lambda_min_, lambda_max_);
        raise(Errc::WavelengthOutOfRange, buf);
    }
    switch (form_) {
        case DispersionForm::sellmeier: {
            const double l2 = lambda_um * lambda_um;
            double n2 = offset_;
            for (const auto& t : terms_) n2 += t[0] * l2 / (l2 - t[1]);
            return std::sqrt(n2);
        }
        case DispersionForm::cauchy: {
            const double inv_l2 = 1.0 / (lambda_um * lambda_um);
            double n = 0.0;
            double p = 1.0;
            for (double c : coefficients_) {
                n += c * p;
                p *= inv_l2;
            }
            return n;
        }
        case DispersionForm::tabulated:
            return table_(lambda_um);
    }
    return 0.0;
}

double AlGaAsParametric::evaluate(double x, double lambda_um) const {
    const double E = 1.23984193 / lambda_um;  // photon energy, eV
    const double E0 = E0_eV[0] + E0_eV[1] * x + E0_eV[2] * x * x;
    const double Ed = Ed_eV[0] + Ed_eV[1] * x;
    const double Eg = Eg_eV[0] + Eg_eV[1] * x + Eg_eV[2] * x * x;
    const double eta_over_pi = Ed / (2.0 * E0 * E0 * E0 * (E0 * E0 - Eg * Eg));
    const double n2 = 1.0 + Ed / E0 + Ed * E * E / (E0 * E0 * E0) +
                      eta_over_pi * E * E * E * E *
                          std::log((2.0 * E0 * E0 - Eg * Eg - E * E) / (Eg * Eg - E * E));
    return std::sqrt(n2);
}

double AlGaAsParametric::lambda_min_um(double x) const {
    const double Eg = Eg_eV[0] + Eg_eV[1] * x + Eg_eV[2] * x * x;
    return 1.23984193 / (gap_margin * Eg);
}

DispersionModel AlGaAsParametric::materialize(double x) const {
    const double lo = lambda_min_um(x);
    const double hi = lambda_max_um;
    // Table extends slightly past the valid range so the natural-spline
    // boundary segments sit outside it.
    const double pad = 0.004 * (hi - lo);
    const int n_pts = 1200;
    std::vector<double> ls(n_pts), ns(n_pts);
    for (int i = 0; i < n_pts; ++i) {
        const double l = (lo - pad) + (hi + pad - (lo - pad)) * i / (n_pts - 1);
        ls[i] = l;
        ns[i] = evaluate(x, l);
    }
    char name[64];
    std::snprintf(name, sizeof name, "AlGaAs(%g)", x);
    return DispersionModel::tabulated(name, std::move(ls), std::move(ns), lo, hi);
}

MaterialId parse_material_id(const std::string& identifier) {
    MaterialId id;
    const auto open = identifier.find('(');
    if (open == std::string::npos) {
        id.base = identifier;
        return id;
    }
    if (identifier.back() != ')')
        raise(Errc::UnknownMaterial, "malformed identifier '" + identifier + "'");
    id.base = identifier.substr(0, open);
    const std::string arg = identifier.substr(open + 1, identifier.size() - open - 2);
    char* end = nullptr;
    id.parameter = std::strtod(arg.c_str(), &end);
    if (end == arg.c_str() || *end != '\0')
        raise(Errc::UnknownMaterial, "malformed parameter in '" + identifier + "'");
    id.has_parameter = true;
    return id;
}

namespace {

std::pair<double, double> read_range(const json& j, const char* key = "range_um") {
    const auto& r = j.at(key);
    return {r.at(0).get<double>(), r.at(1).get<double>()};
}

DispersionModel model_from_json(const std::string& name, const json& j) {
    const std::string form = j.at("form").get<std::string>();
    const auto [lo, hi] = read_range(j);
    if (form == "sellmeier") {
        std::vector<std::array<double, 2>> terms;
        for (const auto& t : j.at("terms"))
            terms.push_back({t.at(0).get<double>(), t.at(1).get<double>()});
        return DispersionModel::sellmeier(name, j.value("offset", 1.0), std::move(terms), lo, hi);
    }
    if (form == "cauchy") {
        return DispersionModel::cauchy(name, j.at("coefficients").get<std::vector<double>>(), lo, hi);
    }
    if (form == "tabulated") {
        return DispersionModel::tabulated(name, j.at("lambda_um").get<std::vector<double>>(),
                                          j.at("n").get<std::vector<double>>(), lo, hi);
    }
    raise(Errc::BadConfig, "material '" + name + "': unknown form '" + form + "'");
}

}  // namespace

MaterialLibrary MaterialLibrary::from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        raise(Errc::BadConfig, std::string("material library parse failure: ") + e.what());
    }
    MaterialLibrary lib;
    lib.version_ = doc.value("version", "unversioned");
    for (const auto& [name, body] : doc.at("materials").items()) {
        Entry e;
        if (body.contains("axes")) {
            for (const auto& [axis, model] : body.at("axes").items())
                e.axes.emplace(axis_from_string(axis), model_from_json(name, model));
        } else if (body.value("form", "") == "afromowitz") {
            auto p = std::make_shared<AlGaAsParametric>();
            auto fill = [](auto& dst, const json& src) {
                for (std::size_t i = 0; i < dst.size() && i < src.size(); ++i)
                    dst[i] = src.at(i).get<double>();
            };
            fill(p->E0_eV, body.at("E0_eV"));
            fill(p->Ed_eV, body.at("Ed_eV"));
            fill(p->Eg_eV, body.at("Eg_eV"));
            p->x_min = body.at("x_range").at(0).get<double>();
            p->x_max = body.at("x_range").at(1).get<double>();
            p->gap_margin = body.value("gap_margin", 0.93);
            p->lambda_max_um = body.at("lambda_max_um").get<double>();
            p->reference = body.value("reference", "");
            e.parametric = std::move(p);
        } else {
            e.axes.emplace(OpticalAxis::isotropic, model_from_json(name, body));
        }
        lib.entries_.emplace(name, std::move(e));
    }
    return lib;
}

MaterialLibrary MaterialLibrary::from_file(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) raise(Errc::BadConfig, "cannot open material library '" + path + "'");
    std::string text;
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, got);
    std::fclose(f);
    return from_json_text(text);
}

const MaterialLibrary::Entry& MaterialLibrary::entry(const std::string& base) const {
    auto it = entries_.find(base);
    if (it == entries_.end())
        raise(Errc::UnknownMaterial, "'" + base + "' not in material library");
    return it->second;
}

const DispersionModel& MaterialLibrary::materialized(const Entry& e, const std::string& key,
                                                     double x) const {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    auto it = cache_->models.find(key);
    if (it == cache_->models.end()) {
        if (!(x >= e.parametric->x_min && x <= e.parametric->x_max))
            raise(Errc::UnknownMaterial, key + ": composition outside supported range");
        it = cache_->models.emplace(key, e.parametric->materialize(x)).first;
    }
    return it->second;
}

const DispersionModel& MaterialLibrary::model(const std::string& material,
                                              OpticalAxis axis) const {
    const MaterialId id = parse_material_id(material);
    const Entry& e = entry(id.base);
    if (e.parametric) {
        if (!id.has_parameter)
            raise(Errc::UnknownMaterial,
                  "'" + id.base + "' requires a composition parameter, e.g. " + id.base + "(0.4)");
        return materialized(e, material, id.parameter);
    }
    if (id.has_parameter)
        raise(Errc::UnknownMaterial, "'" + id.base + "' takes no parameter");
    auto it = e.axes.find(axis);
    if (it == e.axes.end() && axis == OpticalAxis::isotropic && e.axes.size() > 1)
        raise(Errc::BadConfig, "'" + material + "' is anisotropic; specify an optical axis");
    if (it == e.axes.end())
        raise(Errc::BadConfig,
              "'" + material + "' has no model for axis " + axis_name(axis));
    return it->second;
}

double MaterialLibrary::index(const std::string& material, OpticalAxis axis,
                              double lambda_um) const {
    return model(material, axis)(lambda_um);
}

bool MaterialLibrary::has(const std::string& material) const {
    try {
        const MaterialId id = parse_material_id(material);
        return entries_.count(id.base) > 0;
    } catch (const Error&) {
        return false;
    }
}

bool MaterialLibrary::is_anisotropic(const std::string& material) const {
    const MaterialId id = parse_material_id(material);
    return entry(id.base).axes.size() > 1;
}

std::pair<double, double> MaterialLibrary::valid_range(const std::string& material,
                                                       OpticalAxis axis) const {
    const DispersionModel& m = model(material, axis);
    return {m.lambda_min(), m.lambda_max()};
}

std::vector<std::string> MaterialLibrary::names() const {
    std::vector<std::string> out;
    for (const auto& [name, e] : entries_) out.push_back(name);
    return out;
}

}  // namespace spdcwg
