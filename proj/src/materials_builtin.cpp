#include "spdcwg/materials.hpp"

#include "builtin_materials.hpp"

namespace spdcwg {

MaterialLibrary MaterialLibrary::builtin() {
    return from_json_text(detail::builtin_materials_json);
}

}  // namespace spdcwg
