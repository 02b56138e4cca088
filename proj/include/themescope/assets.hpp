#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace themescope {

/// SHA-256 digests of the prompt texts shipped under prompts/.
inline constexpr std::string_view kSdgSystemPromptSha256 =
    "498f2dbb65ce2d3e896aafd2457b488c9421f8d67781b7d73548e37764a9b33e";
inline constexpr std::string_view kVlmSummaryPromptSha256 =
    "5215f8bbbe5f1a9e813e46d9e31dc16f364e3e4ecfe1b49fcb763b7516c95bba";

/// Prompt texts, compiled in from prompts/*.txt or loaded from disk.
struct PromptAssets {
  std::string sdg_system;
  std::string vlm_summary;

  static const PromptAssets& builtin();
  /// Unset paths fall back to the built-in text.
  static PromptAssets load(const std::optional<std::filesystem::path>& sdg_system,
                           const std::optional<std::filesystem::path>& vlm_summary);
};

/// Contents of assets/sdg_hashtags.json as compiled into the library.
std::string_view builtin_hashtag_json();

std::string sha256_hex(std::string_view data);

std::string base64_encode(std::string_view bytes);

}  // namespace themescope
