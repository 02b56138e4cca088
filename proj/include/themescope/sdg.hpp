#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace themescope {

inline constexpr int kGoalCount = 17;
/// 17 goals plus None.
inline constexpr int kLabelCount = kGoalCount + 1;

/// One of the 17 Sustainable Development Goals, or None.
class SdgLabel {
 public:
  constexpr SdgLabel() = default;

  static constexpr SdgLabel none() { return SdgLabel{}; }
  /// Throws ValidationError unless 1 <= number <= 17.
  static SdgLabel goal(int number);
  /// 0 maps to None, 1..17 to the goals.
  static SdgLabel from_index(int index);

  constexpr bool is_none() const { return value_ == 0; }
  /// Goal number 1..17, 0 for None.
  constexpr int goal_number() const { return value_; }
  /// Dense index 0..17 with None at 0.
  constexpr int index() const { return value_; }

  /// "SDG1".."SDG17" or "None".
  std::string to_string() const;
  /// Strict inverse of to_string(), used for persisted files.
  static std::optional<SdgLabel> parse(std::string_view text);

  friend constexpr auto operator<=>(SdgLabel, SdgLabel) = default;

 private:
  explicit constexpr SdgLabel(std::uint8_t v) : value_(v) {}
  std::uint8_t value_ = 0;
};

/// The ten GICS sectors.
enum class Sector : std::uint8_t {
  CommunicationServices,
  ConsumerDiscretionary,
  ConsumerStaples,
  Energy,
  Financials,
  HealthCare,
  Industrials,
  InformationTechnology,
  Materials,
  Utilities,
};

inline constexpr std::array<Sector, 10> kAllSectors = {
    Sector::CommunicationServices, Sector::ConsumerDiscretionary, Sector::ConsumerStaples,
    Sector::Energy,                Sector::Financials,            Sector::HealthCare,
    Sector::Industrials,           Sector::InformationTechnology, Sector::Materials,
    Sector::Utilities,
};

std::string_view sector_name(Sector sector);
/// Case-insensitive match against the canonical names; "Healthcare" is
/// accepted as an alias of "Health Care".
std::optional<Sector> parse_sector(std::string_view name);

/// Parent grouping of the goals used to colour the distribution plots.
enum class SdgTheme : std::uint8_t { People, Planet, Prosperity, Peace, Partnership };

SdgTheme theme_of(int goal_number);
std::string_view theme_name(SdgTheme theme);

}  // namespace themescope
