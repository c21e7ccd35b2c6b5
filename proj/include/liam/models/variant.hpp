#pragma once

#include <string>
#include <vector>

#include "liam/errors.hpp"

namespace liam::models {

enum class Variant {
  Liam,
  Fiam,
  Nam,
  Cbam,
  Carl,
  LiamVae,
  LiamLocal,
  LiamNoActRecon,
  LiamNoObsRecon,
  LiamNoAct,
  LiamNoObs,
};

/// What the auxiliary model is trained to do.
enum class Objective { None, Reconstruction, Classification, Contrastive, Variational };

/// Wiring of one variant: which signals feed the encoder and which targets
/// the decoder reconstructs.
struct VariantSpec {
  Variant variant = Variant::Liam;
  std::string name;
  Objective objective = Objective::Reconstruction;
  bool encoder_obs = true;        // controlled (or, for full information, modelled) observation
  bool encoder_act = true;        // previous action of the same agent
  bool full_information = false;  // encoder reads the modelled agent's trajectory
  bool recon_obs = true;
  bool recon_act = true;
  bool local_targets = false;  // targets are the controlled agent's next observation and action

  bool has_action_head() const {
    return (objective == Objective::Reconstruction || objective == Objective::Variational) && recon_act &&
           !local_targets;
  }
  bool has_observation_head() const {
    return (objective == Objective::Reconstruction || objective == Objective::Variational) && recon_obs &&
           !local_targets;
  }
};

inline std::vector<std::string> variant_names() {
  return {"liam", "fiam", "nam", "cbam", "carl", "liam-vae", "liam-local", "liam-no-act-recon", "liam-no-obs-recon",
          "liam-no-act", "liam-no-obs"};
}

inline VariantSpec variant_spec(Variant v) {
  VariantSpec s;
  s.variant = v;
  switch (v) {
    case Variant::Liam: s.name = "liam"; break;
    case Variant::Fiam:
      s.name = "fiam";
      s.full_information = true;
      break;
    case Variant::Nam:
      s.name = "nam";
      s.objective = Objective::None;
      s.recon_obs = s.recon_act = false;
      break;
    case Variant::Cbam:
      s.name = "cbam";
      s.objective = Objective::Classification;
      s.recon_obs = s.recon_act = false;
      break;
    case Variant::Carl:
      s.name = "carl";
      s.objective = Objective::Contrastive;
      s.recon_obs = s.recon_act = false;
      break;
    case Variant::LiamVae:
      s.name = "liam-vae";
      s.objective = Objective::Variational;
      break;
    case Variant::LiamLocal:
      s.name = "liam-local";
      s.local_targets = true;
      break;
    case Variant::LiamNoActRecon:
      s.name = "liam-no-act-recon";
      s.recon_act = false;
      break;
    case Variant::LiamNoObsRecon:
      s.name = "liam-no-obs-recon";
      s.recon_obs = false;
      break;
    case Variant::LiamNoAct:
      s.name = "liam-no-act";
      s.encoder_act = false;
      break;
    case Variant::LiamNoObs:
      s.name = "liam-no-obs";
      s.encoder_obs = false;
      break;
  }
  return s;
}

inline VariantSpec parse_variant(const std::string& name) {
  const auto names = variant_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return variant_spec(static_cast<Variant>(i));
  }
  std::string known;
  for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("variant: unknown variant '" + name + "' (known: " + known + ")");
}

}  // namespace liam::models
