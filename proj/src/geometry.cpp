#include "spdcwg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "spdcwg/error.hpp"

namespace spdcwg {

namespace {

using nlohmann::json;

AxisAssignment parse_axes(const json& j) {
    AxisAssignment a;
    if (j.contains("TE")) a.te = axis_from_string(j.at("TE").get<std::string>());
    if (j.contains("TM")) a.tm = axis_from_string(j.at("TM").get<std::string>());
    return a;
}

Layer parse_layer(const json& j, const std::string& context) {
    if (!j.is_array() || j.size() < 2 || j.size() > 3)
        raise(Errc::BadConfig, context + ": stack entries are [thickness_um|\"semi\", material, {axes}?]");
    Layer layer;
    if (j[0].is_string()) {
        if (j[0].get<std::string>() != "semi")
            raise(Errc::BadConfig, context + ": thickness must be a number or \"semi\"");
        layer.semi_infinite = true;
    } else {
        layer.thickness_um = j[0].get<double>();
    }
    layer.material = j[1].get<std::string>();
    if (j.size() == 3) layer.axes = parse_axes(j[2]);
    return layer;
}

}  // namespace

void LayerStack::validate(const std::string& context) const {
    if (layers.size() < 2)
        raise(Errc::BadConfig, context + ": a stack needs at least two layers");
    if (!layers.front().semi_infinite || !layers.back().semi_infinite)
        raise(Errc::BadConfig, context + ": outer stack layers must be \"semi\"");
    for (std::size_t i = 1; i + 1 < layers.size(); ++i) {
        if (layers[i].semi_infinite)
            raise(Errc::BadConfig, context + ": only the outer layers may be semi-infinite");
        if (!(layers[i].thickness_um > 0.0))
            raise(Errc::BadConfig, context + ": layer thicknesses must be positive");
    }
    for (const auto& layer : layers)
        if (layer.material.empty())
            raise(Errc::BadConfig, context + ": every layer names a material");
}

double LayerStack::top_z() const {
    double z = base_z_um;
    for (std::size_t i = 1; i + 1 < layers.size(); ++i) z += layers[i].thickness_um;
    return z;
}

ResolvedStack LayerStack::resolve(const MaterialLibrary& lib, double lambda_um,
                                  Polarization pol) const {
    ResolvedStack rs;
    rs.base_z_um = base_z_um;
    rs.n.reserve(layers.size());
    for (const auto& layer : layers)
        rs.n.push_back(lib.index(layer.material, layer.axes.for_pol(pol), lambda_um));
    for (std::size_t i = 1; i + 1 < layers.size(); ++i) rs.d.push_back(layers[i].thickness_um);
    return rs;
}

int LayerStack::layer_at(double z) const {
    if (z < base_z_um) return 0;
    double top = base_z_um;
    for (std::size_t i = 1; i + 1 < layers.size(); ++i) {
        top += layers[i].thickness_um;
        if (z < top) return static_cast<int>(i);
    }
    return static_cast<int>(layers.size()) - 1;
}

CrossSection CrossSection::from_json(const nlohmann::json& doc) {
    CrossSection cs;
    cs.label = doc.value("label", std::string{});
    if (!doc.contains("regions") || !doc.at("regions").is_array())
        raise(Errc::BadConfig, "structure: \"regions\" array is required");
    for (const auto& jr : doc.at("regions")) {
        LateralRegion region;
        region.name = jr.at("name").get<std::string>();
        const auto& jw = jr.at("width_um");
        if (jw.is_string()) {
            if (jw.get<std::string>() != "semi")
                raise(Errc::BadConfig, "region " + region.name + ": width must be a number or \"semi\"");
            region.semi_infinite = true;
        } else {
            region.width_um = jw.get<double>();
        }
        region.stack.base_z_um = jr.value("base_z_um", 0.0);
        for (const auto& jl : jr.at("stack"))
            region.stack.layers.push_back(parse_layer(jl, "region " + region.name));
        if (jr.contains("fallback")) region.fallback_material = jr.at("fallback").get<std::string>();
        cs.regions.push_back(std::move(region));
    }
    if (doc.contains("chi2")) {
        for (const auto& jc : doc.at("chi2")) {
            Chi2Entry entry;
            entry.region = jc.at("region").get<std::string>();
            entry.layer = jc.at("layer").get<int>();
            entry.component = jc.value("component", std::string{"xxx"});
            entry.value = jc.value("value", 1.0);
            entry.qpm = jc.value("qpm", false);
            cs.chi2.push_back(std::move(entry));
        }
    }
    if (doc.contains("cores")) {
        for (const auto& jc : doc.at("cores")) {
            CoreBox box;
            box.name = jc.at("name").get<std::string>();
            box.region = jc.at("region").get<std::string>();
            box.layer = jc.at("layer").get<int>();
            cs.cores.push_back(std::move(box));
        }
    }
    if (doc.contains("grid")) {
        const auto& jg = doc.at("grid");
        cs.grid.spacing_um = jg.value("spacing_um", cs.grid.spacing_um);
        cs.grid.window_factor = jg.value("window_factor", cs.grid.window_factor);
    }
    cs.validate();
    return cs;
}

CrossSection CrossSection::from_file(const std::string& path) {
    return from_json(load_json_section(path, "structure"));
}

void CrossSection::validate() const {
    if (regions.empty()) raise(Errc::BadConfig, "structure: at least one region is required");
    std::set<std::string> names;
    for (const auto& region : regions) {
        if (!names.insert(region.name).second)
            raise(Errc::BadConfig, "structure: duplicate region name " + region.name);
        region.stack.validate("region " + region.name);
    }
    if (regions.size() == 1) {
        if (!regions.front().semi_infinite)
            raise(Errc::BadConfig, "structure: a single region must be semi-infinite");
    } else {
        if (!regions.front().semi_infinite || !regions.back().semi_infinite)
            raise(Errc::BadConfig, "structure: outer regions must have width \"semi\"");
        for (std::size_t i = 1; i + 1 < regions.size(); ++i) {
            if (regions[i].semi_infinite)
                raise(Errc::BadConfig, "structure: only the outer regions may be semi-infinite");
            if (!(regions[i].width_um > 0.0))
                raise(Errc::BadConfig, "structure: region widths must be positive");
        }
    }
    for (const auto& entry : chi2) {
        int r = region_index(entry.region);
        const auto& layers = regions[r].stack.layers;
        if (entry.layer < 0 || entry.layer >= static_cast<int>(layers.size()))
            raise(Errc::BadConfig, "chi2: layer index out of range in region " + entry.region);
        if (layers[entry.layer].semi_infinite)
            raise(Errc::BadConfig, "chi2: semi-infinite layers cannot carry a nonlinearity");
        if (entry.component.size() != 3 ||
            entry.component.find_first_not_of("xyz") != std::string::npos)
            raise(Errc::BadConfig, "chi2: component must be three of x/y/z, e.g. \"xyx\"");
    }
    for (const auto& box : cores) {
        int r = region_index(box.region);
        const auto& layers = regions[r].stack.layers;
        if (box.layer < 0 || box.layer >= static_cast<int>(layers.size()))
            raise(Errc::BadConfig, "cores: layer index out of range in region " + box.region);
    }
    if (!(grid.spacing_um > 0.0) || !(grid.window_factor > 0.0))
        raise(Errc::BadConfig, "grid: spacing and window factor must be positive");
}

int CrossSection::region_index(const std::string& name) const {
    for (std::size_t i = 0; i < regions.size(); ++i)
        if (regions[i].name == name) return static_cast<int>(i);
    raise(Errc::BadConfig, "structure: unknown region " + name);
}

const CoreBox& CrossSection::core(const std::string& name) const {
    for (const auto& box : cores)
        if (box.name == name) return box;
    raise(Errc::BadConfig, "structure: unknown core " + name);
}

std::vector<double> CrossSection::region_edges() const {
    std::vector<double> edges;
    double x = 0.0;
    for (std::size_t i = 1; i < regions.size(); ++i) {
        edges.push_back(x);
        if (i + 1 < regions.size()) x += regions[i].width_um;
    }
    return edges;
}

int CrossSection::region_at(double x) const {
    const auto edges = region_edges();
    int r = 0;
    while (r < static_cast<int>(edges.size()) && x >= edges[r]) ++r;
    return r;
}

double CrossSection::z_min() const {
    double z = regions.front().stack.base_z_um;
    for (const auto& region : regions) z = std::min(z, region.stack.base_z_um);
    return z;
}

double CrossSection::z_max() const {
    double z = regions.front().stack.top_z();
    for (const auto& region : regions) z = std::max(z, region.stack.top_z());
    return z;
}

nlohmann::json load_json_section(const std::string& path, const std::string& section) {
    std::ifstream in(path);
    if (!in) raise(Errc::BadConfig, "cannot open " + path);
    json doc;
    try {
        doc = json::parse(in, nullptr, true, true);
    } catch (const json::exception& e) {
        raise(Errc::BadConfig, path + ": " + e.what());
    }
    if (doc.contains(section)) return doc.at(section);
    return doc;
}

}  // namespace spdcwg
