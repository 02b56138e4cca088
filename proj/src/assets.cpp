#include "themescope/assets.hpp"

#include <openssl/evp.h>

#include "detail.hpp"
#include "themescope/error.hpp"

namespace themescope {

namespace embedded {
extern const std::string_view kSdgSystemPrompt;
extern const std::string_view kVlmSummaryPrompt;
extern const std::string_view kHashtagJson;
}  // namespace embedded

const PromptAssets& PromptAssets::builtin() {
  static const PromptAssets assets{std::string(embedded::kSdgSystemPrompt),
                                   std::string(embedded::kVlmSummaryPrompt)};
  return assets;
}

PromptAssets PromptAssets::load(const std::optional<std::filesystem::path>& sdg_system,
                                const std::optional<std::filesystem::path>& vlm_summary) {
  PromptAssets out = builtin();
  if (sdg_system) out.sdg_system = detail::read_file(*sdg_system);
  if (vlm_summary) out.vlm_summary = detail::read_file(*vlm_summary);
  return out;
}

std::string_view builtin_hashtag_json() { return embedded::kHashtagJson; }

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

}  // namespace themescope
