#include "themescope/sdg.hpp"

#include <cctype>

#include "themescope/error.hpp"

namespace themescope {

SdgLabel SdgLabel::goal(int number) {
  if (number < 1 || number > kGoalCount) {
    throw ValidationError("SDG number out of range: " + std::to_string(number));
  }
  return SdgLabel(static_cast<std::uint8_t>(number));
}

SdgLabel SdgLabel::from_index(int index) {
  return index == 0 ? none() : goal(index);
}

std::string SdgLabel::to_string() const {
  return is_none() ? std::string("None") : "SDG" + std::to_string(value_);
}

std::optional<SdgLabel> SdgLabel::parse(std::string_view text) {
  if (text == "None") return none();
  if (text.size() < 4 || text.size() > 5 || text.substr(0, 3) != "SDG") return std::nullopt;
  int n = 0;
  for (char c : text.substr(3)) {
    if (c < '0' || c > '9') return std::nullopt;
    n = n * 10 + (c - '0');
  }
  if (text[3] == '0' || n < 1 || n > kGoalCount) return std::nullopt;
  return goal(n);
}

namespace {

constexpr std::array<std::string_view, 10> kSectorNames = {
    "Communication Services", "Consumer Discretionary", "Consumer Staples",
    "Energy",                 "Financials",             "Health Care",
    "Industrials",            "Information Technology", "Materials",
    "Utilities",
};

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::string_view sector_name(Sector sector) {
  return kSectorNames[static_cast<std::size_t>(sector)];
}

std::optional<Sector> parse_sector(std::string_view name) {
  for (std::size_t i = 0; i < kSectorNames.size(); ++i) {
    if (iequals(name, kSectorNames[i])) return kAllSectors[i];
  }
  if (iequals(name, "Healthcare")) return Sector::HealthCare;
  return std::nullopt;
}

SdgTheme theme_of(int goal_number) {
  if (goal_number >= 1 && goal_number <= 5) return SdgTheme::People;
  if (goal_number == 6 || (goal_number >= 12 && goal_number <= 15)) return SdgTheme::Planet;
  if (goal_number >= 7 && goal_number <= 11) return SdgTheme::Prosperity;
  if (goal_number == 16) return SdgTheme::Peace;
  if (goal_number == 17) return SdgTheme::Partnership;
  throw ValidationError("SDG number out of range: " + std::to_string(goal_number));
}

std::string_view theme_name(SdgTheme theme) {
  switch (theme) {
    case SdgTheme::People: return "People";
    case SdgTheme::Planet: return "Planet";
    case SdgTheme::Prosperity: return "Prosperity";
    case SdgTheme::Peace: return "Peace";
    case SdgTheme::Partnership: return "Partnership";
  }
  return "";
}

}  // namespace themescope
