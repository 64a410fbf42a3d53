#pragma once

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "spdcwg/spline.hpp"

namespace spdcwg {

enum class DispersionForm { sellmeier, cauchy, tabulated };
enum class OpticalAxis { isotropic, ordinary, extraordinary };

OpticalAxis axis_from_string(const std::string& s);
const char* axis_name(OpticalAxis axis);

class DispersionModel {
  public:
    // n^2 = offset + sum B_i l^2 / (l^2 - C_i), C_i in um^2.
    static DispersionModel sellmeier(std::string name, double offset,
                                     std::vector<std::array<double, 2>> terms,
                                     double lambda_min_um, double lambda_max_um);

    // n = c0 + c1/l^2 + c2/l^4 + ...
    static DispersionModel cauchy(std::string name, std::vector<double> coefficients,
                                  double lambda_min_um, double lambda_max_um);

    // Cubic-spline table; the table may extend past the declared valid range
    // so boundary knots do not degrade interior accuracy.
    static DispersionModel tabulated(std::string name, std::vector<double> lambda_um,
                                     std::vector<double> n,
                                     double lambda_min_um, double lambda_max_um);

    double operator()(double lambda_um) const;  // throws WavelengthOutOfRange

    const std::string& name() const { return name_; }
    DispersionForm form() const { return form_; }
    double lambda_min() const { return lambda_min_; }
    double lambda_max() const { return lambda_max_; }

  private:
    DispersionModel() = default;

    std::string name_;
    DispersionForm form_ = DispersionForm::cauchy;
    double offset_ = 0.0;
    std::vector<std::array<double, 2>> terms_;
    std::vector<double> coefficients_;
    CubicSpline table_;
    double lambda_min_ = 0.0;
    double lambda_max_ = 0.0;
};

// Composition-parametrized AlGaAs generator (modified single-oscillator
// form); materialized into tabulated DispersionModel instances per requested
// Al fraction.  Kept as data so the model is configuration, not code.
struct AlGaAsParametric {
    std::array<double, 3> E0_eV{};  // polynomial in x, ascending
    std::array<double, 2> Ed_eV{};
    std::array<double, 3> Eg_eV{};
    double x_min = 0.0;
    double x_max = 0.9;
    double gap_margin = 0.93;       // lambda_min set where E = margin * Eg
    double lambda_max_um = 2.2;
    std::string reference;

    double evaluate(double x, double lambda_um) const;
    double lambda_min_um(double x) const;
    DispersionModel materialize(double x) const;
};

class MaterialLibrary {
  public:
    static MaterialLibrary builtin();
    static MaterialLibrary from_file(const std::string& path);
    static MaterialLibrary from_json_text(const std::string& text);

    // Identifier grammar: plain names ("SiO2", "air", "LiNbO3", "a-Si",
    // "As2Se3") or parametrized "AlGaAs(<x>)" with x the Al fraction.
    double index(const std::string& material, OpticalAxis axis, double lambda_um) const;
    const DispersionModel& model(const std::string& material, OpticalAxis axis) const;

    bool has(const std::string& material) const;
    bool is_anisotropic(const std::string& material) const;
    std::pair<double, double> valid_range(const std::string& material, OpticalAxis axis) const;
    const std::string& version() const { return version_; }
    std::vector<std::string> names() const;

  private:
    struct Entry {
        std::map<OpticalAxis, DispersionModel> axes;
        std::shared_ptr<AlGaAsParametric> parametric;  // null unless generator-backed
    };
    struct Cache {
        std::mutex mutex;
        std::map<std::string, DispersionModel> models;  // node-stable references
    };

    const Entry& entry(const std::string& base) const;
    const DispersionModel& materialized(const Entry& e, const std::string& key, double x) const;

    std::string version_;
    std::map<std::string, Entry> entries_;
    std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

// Splits "AlGaAs(0.4)" into ("AlGaAs", 0.4, true); plain names return
// (name, 0, false).  Malformed parameter syntax throws UnknownMaterial.
struct MaterialId {
    std::string base;
    double parameter = 0.0;
    bool has_parameter = false;
};
MaterialId parse_material_id(const std::string& identifier);

}  // namespace spdcwg
