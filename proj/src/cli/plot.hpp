#pragma once

#include <string>

#include "ssmfrc/reduced.hpp"

namespace ssmfrc::cli {

/// Static amplitude-vs-Omega plot; stable runs solid, unstable runs dashed.
std::string render_frc_svg(const FrcResult& result, const std::string& amplitude_label);

}  // namespace ssmfrc::cli
