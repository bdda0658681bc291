#pragma once

#include <filesystem>
#include <string>

#include "evonet/network.hpp"

namespace evonet {

/// Network checkpoint as JSON text.
///
/// Layout (all matrices row-major, doubles in shortest round-trip form):
///
///   {
///     "format": "evonet-network", "version": 1,
///     "mode": "classification" | "regression",
///     "input_dim": n, "output_dim": m,
///     "layers": [ {"inputs": in_d, "width": R_d, "eta": η_d,
///                  "W": [in_d*R_d numbers], "b": [R_d numbers]}, ... ],
///     "head": {"inputs": R_D, "outputs": m, "eta": η_out,
///              "W": [R_D*m numbers], "c": [m numbers]}
///   }
///
/// Restoring a snapshot reproduces every finite double bit for bit.
std::string to_snapshot(const EvolvingNetwork& net);
EvolvingNetwork from_snapshot(const std::string& text);

void save_snapshot(const EvolvingNetwork& net, const std::filesystem::path& path);
EvolvingNetwork load_snapshot(const std::filesystem::path& path);

}  // namespace evonet
