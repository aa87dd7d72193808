#include "hhnas/search_space.hpp"

#include <cmath>
#include <set>

#include "hhnas/error.hpp"

namespace hhnas {

namespace {

bool is_integral(double v) { return std::isfinite(v) && std::floor(v) == v; }

} // namespace

const char *to_string(ParamKind kind) noexcept {
  switch (kind) {
  case ParamKind::Binary:
    return "binary";
  case ParamKind::Discrete:
    return "discrete";
  case ParamKind::Continuous:
    return "continuous";
  }
  return "?";
}

ParamKind param_kind_from_string(const std::string &text) {
  if (text == "binary")
    return ParamKind::Binary;
  if (text == "discrete")
    return ParamKind::Discrete;
  if (text == "continuous")
    return ParamKind::Continuous;
  throw ValidationError(ValidationError::Kind::InvalidSpec, "kind",
                        "unknown parameter kind '" + text + "'");
}

std::uint64_t decode_arch_index(std::span<const std::uint8_t> macro_vector) {
  std::uint64_t index = 0;
  for (auto bit : macro_vector) {
    index = (index << 1) | (bit ? 1u : 0u);
  }
  return index;
}

ArchIndex effective_arch_index(std::span<const std::uint8_t> macro_vector,
                               std::span<const ParamSpec> specs) {
  if (macro_vector.size() != specs.size()) {
    throw ValidationError(ValidationError::Kind::ArchMismatch, "macro_vector",
                          "macro vector has " +
                              std::to_string(macro_vector.size()) +
                              " bits, space declares " +
                              std::to_string(specs.size()));
  }
  ArchIndex index = 0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto bit = macro_vector[i];
    if (bit > 1) {
      throw ValidationError(ValidationError::Kind::OutOfBounds, specs[i].name,
                            "macro bit '" + specs[i].name + "' is not 0/1");
    }
    if (specs[i].fixed) {
      if (static_cast<double>(bit) != specs[i].initial) {
        throw ValidationError(ValidationError::Kind::FixedBitViolation,
                              specs[i].name,
                              "fixed macro bit '" + specs[i].name +
                                  "' differs from its declared value");
      }
      continue;
    }
    index = (index << 1) | bit;
  }
  return index;
}

void validate_spec(const ParamSpec &spec, const std::string &scope) {
  const auto where = scope + "." + spec.name;
  auto fail = [&](const std::string &msg) {
    throw ValidationError(ValidationError::Kind::InvalidSpec, where,
                          where + ": " + msg);
  };
  if (spec.name.empty())
    fail("empty parameter name");
  if (!std::isfinite(spec.lower) || !std::isfinite(spec.upper) ||
      !std::isfinite(spec.initial))
    fail("bounds and initial must be finite");
  if (spec.lower > spec.upper)
    fail("lower > upper");
  if (spec.initial < spec.lower || spec.initial > spec.upper)
    fail("initial outside [lower, upper]");
  switch (spec.kind) {
  case ParamKind::Binary:
    if (spec.lower != 0.0 || spec.upper != 1.0)
      fail("binary parameters must have bounds [0, 1]");
    [[fallthrough]];
  case ParamKind::Discrete:
    if (!is_integral(spec.lower) || !is_integral(spec.upper) ||
        !is_integral(spec.initial))
      fail("bounds and initial must be integers");
    break;
  case ParamKind::Continuous:
    break;
  }
}

SearchSpace::SearchSpace(std::vector<ParamSpec> macro_params,
                         std::map<ArchIndex, std::vector<ParamSpec>> micro_params)
    : macro_params_(std::move(macro_params)),
      micro_params_(std::move(micro_params)) {
  if (macro_params_.empty()) {
    throw ValidationError(ValidationError::Kind::InvalidSpec, "macro",
                          "at least one macro bit is required");
  }
  std::set<std::string> names;
  for (const auto &spec : macro_params_) {
    if (spec.kind != ParamKind::Binary) {
      throw ValidationError(ValidationError::Kind::InvalidSpec,
                            "macro." + spec.name,
                            "macro parameter '" + spec.name + "' must be binary");
    }
    validate_spec(spec, "macro");
    if (!names.insert(spec.name).second) {
      throw ValidationError(ValidationError::Kind::InvalidSpec,
                            "macro." + spec.name,
                            "duplicate macro parameter '" + spec.name + "'");
    }
    if (!spec.fixed)
      ++free_bits_;
  }
  if (free_bits_ > 31) {
    throw ValidationError(ValidationError::Kind::InvalidSpec, "macro",
                          "too many free macro bits");
  }
  for (const auto &[arch, specs] : micro_params_) {
    const auto scope = "micro." + std::to_string(arch);
    if (arch >= arch_count()) {
      throw ValidationError(ValidationError::Kind::InvalidSpec, scope,
                            "architecture " + std::to_string(arch) +
                                " is unreachable with " +
                                std::to_string(free_bits_) + " free bits");
    }
    std::set<std::string> micro_names;
    for (const auto &spec : specs) {
      validate_spec(spec, scope);
      if (!micro_names.insert(spec.name).second) {
        throw ValidationError(ValidationError::Kind::InvalidSpec,
                              scope + "." + spec.name,
                              "duplicate micro parameter '" + spec.name + "'");
      }
    }
  }
  for (ArchIndex arch = 0; arch < arch_count(); ++arch) {
    micro_params_.try_emplace(arch);
  }
}

std::span<const ParamSpec> SearchSpace::micro_params(ArchIndex arch) const {
  auto it = micro_params_.find(arch);
  if (it == micro_params_.end()) {
    throw ValidationError(ValidationError::Kind::ArchMismatch, "arch_index",
                          "architecture " + std::to_string(arch) +
                              " is outside the search space");
  }
  return it->second;
}

const ParamSpec *SearchSpace::find_micro(ArchIndex arch,
                                         const std::string &name) const {
  auto it = micro_params_.find(arch);
  if (it == micro_params_.end())
    return nullptr;
  for (const auto &spec : it->second) {
    if (spec.name == name)
      return &spec;
  }
  return nullptr;
}

void validate_candidate(const SearchSpace &space, const Candidate &cand) {
  const auto decoded =
      effective_arch_index(cand.macro_vector, space.macro_params());
  if (decoded != cand.arch_index) {
    throw ValidationError(ValidationError::Kind::ArchMismatch, "arch_index",
                          "arch_index " + std::to_string(cand.arch_index) +
                              " but macro vector decodes to " +
                              std::to_string(decoded));
  }
  const auto specs = space.micro_params(cand.arch_index);
  for (const auto &[name, value] : cand.micro_values) {
    if (space.find_micro(cand.arch_index, name) == nullptr) {
      throw ValidationError(ValidationError::Kind::UnknownParam, name,
                            "parameter '" + name + "' is not declared for arch " +
                                std::to_string(cand.arch_index));
    }
  }
  for (const auto &spec : specs) {
    auto it = cand.micro_values.find(spec.name);
    if (it == cand.micro_values.end()) {
      throw ValidationError(ValidationError::Kind::MissingParam, spec.name,
                            "parameter '" + spec.name + "' has no value");
    }
    const double v = it->second;
    if (!std::isfinite(v) || v < spec.lower || v > spec.upper) {
      throw ValidationError(ValidationError::Kind::OutOfBounds, spec.name,
                            "parameter '" + spec.name + "' = " +
                                std::to_string(v) + " outside [" +
                                std::to_string(spec.lower) + ", " +
                                std::to_string(spec.upper) + "]");
    }
    if (spec.kind != ParamKind::Continuous && !is_integral(v)) {
      throw ValidationError(ValidationError::Kind::OutOfBounds, spec.name,
                            "parameter '" + spec.name + "' must be integral");
    }
  }
}

MicroValues initial_micro_values(const SearchSpace &space, ArchIndex arch) {
  MicroValues values;
  for (const auto &spec : space.micro_params(arch)) {
    values.emplace(spec.name, spec.initial);
  }
  return values;
}

Candidate initial_candidate(const SearchSpace &space) {
  Candidate cand;
  for (const auto &spec : space.macro_params()) {
    cand.macro_vector.push_back(static_cast<std::uint8_t>(spec.initial));
  }
  cand.arch_index = effective_arch_index(cand.macro_vector, space.macro_params());
  cand.micro_values = initial_micro_values(space, cand.arch_index);
  cand.iteration = 0;
  return cand;
}

std::string macro_feature_id(const std::string &name) { return "macro/" + name; }

std::string micro_feature_id(ArchIndex arch, const std::string &name) {
  return "arch" + std::to_string(arch) + "/" + name;
}

std::string macro_group() { return "macro"; }

std::string micro_group(ArchIndex arch) { return "arch" + std::to_string(arch); }

} // namespace hhnas
