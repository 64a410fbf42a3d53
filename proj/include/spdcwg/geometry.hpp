#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spdcwg/materials.hpp"
#include "spdcwg/slab.hpp"

namespace spdcwg {

struct AxisAssignment {
    OpticalAxis te = OpticalAxis::isotropic;
    OpticalAxis tm = OpticalAxis::isotropic;
    OpticalAxis for_pol(Polarization p) const { return p == Polarization::TE ? te : tm; }
};

struct Layer {
    bool semi_infinite = false;
    double thickness_um = 0.0;
    std::string material;
    AxisAssignment axes;
};

// Vertical stack, bottom to top; z increases upward and base_z_um anchors the
// lower outer interface so stacks of different regions share one coordinate.
struct LayerStack {
    std::vector<Layer> layers;
    double base_z_um = 0.0;

    void validate(const std::string& context) const;
    double top_z() const;
    ResolvedStack resolve(const MaterialLibrary& lib, double lambda_um, Polarization pol) const;
    int layer_at(double z) const;
};

struct LateralRegion {
    std::string name;
    bool semi_infinite = false;
    double width_um = 0.0;
    LayerStack stack;
    // Lateral index to use when this region has no vertical mode of the
    // requested order; empty means fall back to the stack's outer bulk level.
    std::optional<std::string> fallback_material;
};

// One chi2 tensor component active in (region, layer).  The component string
// holds three axis letters for signal, idler, pump in order; 'x' is the
// lateral axis (TE), 'y' the vertical (TM).
struct Chi2Entry {
    std::string region;
    int layer = 0;
    std::string component = "xyx";
    double value = 1.0;
    bool qpm = false;
};

struct GridSpec {
    double spacing_um = 0.02;
    double window_factor = 6.0;
};

// A named box in the cross-section, for localization fractions and supermode
// parity classification ("core1" = a region/layer cell).
struct CoreBox {
    std::string name;
    std::string region;
    int layer = 0;
};

struct CrossSection {
    std::string label;
    std::vector<LateralRegion> regions;
    std::vector<Chi2Entry> chi2;
    std::vector<CoreBox> cores;
    GridSpec grid;

    static CrossSection from_json(const nlohmann::json& doc);
    static CrossSection from_file(const std::string& path);

    void validate() const;
    bool is_slab() const { return regions.size() == 1; }
    int region_index(const std::string& name) const;
    const CoreBox& core(const std::string& name) const;

    // x positions of region boundaries (regions.size()-1 entries); x = 0 at
    // the left edge of the first finite region.
    std::vector<double> region_edges() const;
    int region_at(double x) const;
    double z_min() const;
    double z_max() const;
};

// Reads a JSON document from disk; if `section` exists at top level the
// subobject is returned, so one fixture file can carry structure, process,
// pump and axes together.
nlohmann::json load_json_section(const std::string& path, const std::string& section);

}  // namespace spdcwg
