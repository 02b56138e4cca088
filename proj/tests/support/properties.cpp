#include "properties.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "fixture.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "themescope/annotate.hpp"
#include "themescope/clustering.hpp"
#include "themescope/config.hpp"
#include "themescope/corpus.hpp"
#include "themescope/evaluate.hpp"
#include "themescope/phash.hpp"
#include "themescope/pipeline.hpp"
#include "themescope/report.hpp"
#include "themescope/stats.hpp"

namespace props {

namespace {

using namespace themescope;
using gen::Rng;
using Result = std::optional<std::string>;
namespace fs = std::filesystem;

template <typename... Parts>
std::string fail(const Parts&... parts) {
  std::ostringstream ss;
  (ss << ... << parts);
  return ss.str();
}

std::string show(const std::vector<double>& v) {
  std::ostringstream ss;
  ss << '[';
  for (std::size_t i = 0; i < v.size(); ++i) ss << (i ? "," : "") << v[i];
  return ss.str() + ']';
}

CorpusStore random_store(Rng& rng, std::size_t max_posts, std::size_t max_companies) {
  auto table = gen::companies(rng, gen::uniform(rng, 1, max_companies));
  auto posts = gen::posts(rng, table, gen::uniform(rng, 0, max_posts));
  return CorpusStore(std::move(table), std::move(posts));
}

LabelMap random_labels(Rng& rng, const CorpusStore& store) {
  LabelMap labels;
  for (const auto& p : store.posts()) labels[p.post_id] = gen::coin(rng, 0.4) ? SdgLabel::none() : gen::label(rng);
  return labels;
}

// ---- corpus ---------------------------------------------------------------

Result corpus_round_trip(Rng& rng) {
  static support::TempDir dir("prop-store");
  const auto store = random_store(rng, 12, 5);
  save_store(store, dir.path());
  const auto back = load_store(dir.path());
  if (!(back.companies() == store.companies())) return "companies differ after reload";
  if (back.posts() != store.posts()) return "posts differ after reload";
  return std::nullopt;
}

Result corpus_hashtag_idempotent(Rng& rng) {
  const auto text = gen::text(rng);
  const auto tags = extract_hashtags(text);
  std::string joined;
  for (const auto& t : tags) joined += "#" + t + " ";
  if (extract_hashtags(joined) != tags) return fail("not idempotent for text: ", text);
  return std::nullopt;
}

Result corpus_engagement(Rng& rng) {
  Post p;
  p.like_count = gen::uniform(rng, 0, 1ULL << 40);
  p.retweet_count = gen::uniform(rng, 0, 1ULL << 40);
  p.reply_count = gen::uniform(rng, 0, 1ULL << 40);
  p.quote_count = gen::uniform(rng, 0, 1ULL << 40);
  const auto e = engagement(p);
  if (e != p.like_count + p.retweet_count) return fail("engagement ", e, " != likes + retweets");
  p.reply_count += 17;
  p.quote_count += 3;
  if (engagement(p) != e) return "replies or quotes changed engagement";
  return std::nullopt;
}

// ---- annotate -------------------------------------------------------------

Result annotate_parse_total(Rng& rng) {
  const auto raw = gen::noisy_response(rng);
  const auto label = parse_sdg_response(raw);
  if (label.index() < 0 || label.index() >= kLabelCount) return fail("inadmissible label for ", raw);
  const int goal = static_cast<int>(gen::uniform(rng, 1, kGoalCount));
  const std::string forms[] = {std::to_string(goal), "SDG" + std::to_string(goal), "sdg " + std::to_string(goal),
                               " " + std::to_string(goal) + ".\n"};
  for (const auto& f : forms) {
    if (parse_sdg_response(f) != SdgLabel::goal(goal)) return fail("grammar form rejected: '", f, "'");
  }
  return std::nullopt;
}

Result annotate_vote_permutation(Rng& rng) {
  const std::size_t n = gen::uniform(rng, 1, 7);
  auto labels = gen::labels(rng, n);
  const std::size_t tie = gen::uniform(rng, 0, n - 1);
  std::map<SdgLabel, int> counts;
  for (auto l : labels) ++counts[l];
  int top = 0, at_top = 0;
  for (auto [l, c] : counts) top = std::max(top, c);
  for (auto [l, c] : counts) at_top += c == top;
  const auto vote = majority_vote(labels, tie);
  if (std::find(labels.begin(), labels.end(), vote) == labels.end()) return "vote outside the inputs";
  if (at_top != 1) return std::nullopt;  // ties are resolved positionally

  std::vector<SdgLabel> others;
  for (std::size_t i = 0; i < n; ++i) {
    if (i != tie) others.push_back(labels[i]);
  }
  std::shuffle(others.begin(), others.end(), rng);
  std::vector<SdgLabel> permuted;
  for (std::size_t i = 0, k = 0; i < n; ++i) permuted.push_back(i == tie ? labels[tie] : others[k++]);
  if (majority_vote(permuted, tie) != vote) return "vote changed under permutation";
  return std::nullopt;
}

Result annotate_vote_closure(Rng& rng) {
  std::vector<SdgLabel> labels = {gen::label(rng), gen::label(rng), gen::label(rng)};
  if (gen::coin(rng)) labels[1] = labels[0];
  const auto vote = majority_vote(labels, gen::uniform(rng, 0, 2));
  if (vote != labels[0] && vote != labels[1] && vote != labels[2]) return "vote is none of the three inputs";
  return std::nullopt;
}

Result annotate_reproducible(Rng& rng) {
  const auto store = random_store(rng, 8, 3);
  const auto& map = HashtagMap::builtin();
  auto make = [&](int in_flight) {
    std::vector<Annotator> annotators;
    for (const char* id : {"a", "b", "c"}) {
      BackendConfig cfg;
      cfg.annotator_id = id;
      cfg.max_in_flight = in_flight;
      annotators.push_back({cfg, std::make_shared<MockSdgBackend>(map)});
    }
    return annotate_corpus(store, annotators).matrix;
  };
  const int flights[] = {1, 2, 3, 8};
  const auto m1 = make(flights[gen::uniform(rng, 0, 3)]);
  const auto m2 = make(flights[gen::uniform(rng, 0, 3)]);
  if (!(m1 == m2)) return "matrices differ across max_in_flight settings";
  return std::nullopt;
}

// ---- evaluate -------------------------------------------------------------

std::pair<std::vector<SdgLabel>, std::vector<SdgLabel>> label_pair(Rng& rng) {
  const std::size_t n = gen::uniform(rng, 1, 50);
  auto a = gen::labels(rng, n);
  auto b = gen::coin(rng, 0.2) ? a : gen::labels(rng, n);
  if (gen::coin(rng, 0.3)) {
    for (std::size_t i = 0; i < n; ++i) {
      if (gen::coin(rng, 0.7)) b[i] = a[i];
    }
  }
  return {a, b};
}

Result evaluate_kappa_bounds(Rng& rng) {
  auto [a, b] = label_pair(rng);
  const double k = cohens_kappa(a, b);
  const double agr = agreement(a, b);
  if (!(k <= 1.0)) return fail("kappa ", k, " > 1");
  if ((k == 1.0) != (agr == 100.0)) return fail("kappa ", k, " with agreement ", agr);
  return std::nullopt;
}

Result evaluate_kappa_symmetric(Rng& rng) {
  auto [a, b] = label_pair(rng);
  if (cohens_kappa(a, b) != cohens_kappa(b, a)) return "kappa(a,b) != kappa(b,a)";
  return std::nullopt;
}

Result evaluate_joint_permutation(Rng& rng) {
  auto [a, b] = label_pair(rng);
  std::vector<std::size_t> order(a.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<SdgLabel> pa, pb;
  for (auto i : order) {
    pa.push_back(a[i]);
    pb.push_back(b[i]);
  }
  if (cohens_kappa(a, b) != cohens_kappa(pa, pb)) return "kappa changed under joint permutation";
  if (agreement(a, b) != agreement(pa, pb)) return "agreement changed under joint permutation";
  return std::nullopt;
}

Result evaluate_kappa_oracle(Rng& rng) {
  auto [a, b] = label_pair(rng);
  const auto expected = oracle::kappa_bruteforce(a, b);
  const double k = cohens_kappa(a, b), agr = agreement(a, b);
  if (std::abs(k - expected.kappa) > 1e-12) return fail("kappa ", k, " vs oracle ", expected.kappa);
  if (std::abs(agr - expected.agreement_pct) > 1e-12) return fail("agreement ", agr, " vs ", expected.agreement_pct);
  return std::nullopt;
}

// ---- visual ---------------------------------------------------------------

Result visual_cluster_invariants(Rng& rng) {
  const auto m = gen::clustered_matrix(rng, gen::uniform(rng, 5, 80), gen::uniform(rng, 2, 8),
                                       gen::uniform(rng, 1, 4), gen::real(rng, 0.02, 0.3));
  ClusterParams p;
  p.tau = gen::real(rng, 0.5, 0.97);
  p.min_size = gen::uniform(rng, 2, 8);
  const auto clusters = threshold_cluster(m, p);
  std::set<std::size_t> seen;
  for (const auto& c : clusters) {
    if (c.size() < p.min_size) return fail("cluster ", c.cluster_id, " smaller than min_size");
    if (!std::is_sorted(c.member_rows.begin(), c.member_rows.end())) return "member rows not ascending";
    if (!std::binary_search(c.member_rows.begin(), c.member_rows.end(), c.seed_row)) return "seed not a member";
    if (c.members.size() != c.member_rows.size()) return "member ids misaligned";
    for (auto r : c.member_rows) {
      if (!seen.insert(r).second) return fail("row ", r, " in two clusters");
      if (r != c.seed_row && !(m.similarity(c.seed_row, r) >= p.tau)) {
        return fail("row ", r, " below tau against seed ", c.seed_row);
      }
    }
  }
  return std::nullopt;
}

Result visual_cluster_schedule(Rng& rng) {
  const std::size_t n = gen::uniform(rng, 5, 120);
  const auto m = gen::clustered_matrix(rng, n, gen::uniform(rng, 2, 6), gen::uniform(rng, 1, 3), 0.1);
  ClusterParams base;
  base.tau = gen::real(rng, 0.6, 0.95);
  base.min_size = gen::uniform(rng, 2, 6);
  base.block = n;
  base.workers = 1;
  ClusterParams other = base;
  other.block = gen::uniform(rng, 1, n);
  const unsigned workers[] = {2, 4, 8};
  other.workers = workers[gen::uniform(rng, 0, 2)];
  if (threshold_cluster(m, base) != threshold_cluster(m, other)) {
    return fail("block ", other.block, " workers ", other.workers, " changed the clusters");
  }
  return std::nullopt;
}

Result visual_dedup(Rng& rng) {
  const std::size_t n = gen::uniform(rng, 1, 150);
  const int threshold = static_cast<int>(gen::uniform(rng, 0, 12));
  std::vector<std::uint64_t> bases;
  for (std::size_t i = 0; i < gen::uniform(rng, 1, 8); ++i) bases.push_back(rng());
  std::map<std::string, std::uint64_t> hashes;
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t h = bases[gen::uniform(rng, 0, bases.size() - 1)];
    for (std::size_t f = gen::uniform(rng, 0, 14); f > 0; --f) h ^= std::uint64_t{1} << gen::uniform(rng, 0, 63);
    hashes["i" + std::to_string(gen::uniform(rng, 0, 99999))] = h;
  }
  const auto result = dedup(hashes, threshold);
  if (result.kept.size() + result.discarded.size() != hashes.size()) return "kept and discarded do not partition";
  for (const auto& id : result.discarded) {
    if (result.kept.contains(id)) return "image both kept and discarded";
    int nearest = 65;
    for (const auto& k : result.kept) {
      if (k < id) nearest = std::min(nearest, hamming_distance(hashes.at(id), hashes.at(k)));
    }
    if (nearest > threshold) return fail(id, " discarded with nearest earlier kept hash at ", nearest);
  }
  const std::vector<std::pair<std::string, std::uint64_t>> sorted(hashes.begin(), hashes.end());
  const auto expected = oracle::dedup_discarded(sorted, threshold);
  if (std::vector<std::string>(result.discarded.begin(), result.discarded.end()) != expected) {
    return "discarded set differs from brute-force greedy scan";
  }
  return std::nullopt;
}

Result visual_round_robin(Rng& rng) {
  const std::size_t companies = gen::uniform(rng, 1, 6);
  const std::size_t n = gen::uniform(rng, 1, 30);
  const std::size_t floor = (n + companies - 1) / companies;
  std::vector<float> values;
  std::vector<std::string> ids, owners;
  for (std::size_t c = 0; c < companies; ++c) {
    const std::size_t pool = floor + gen::uniform(rng, 1, 5);
    for (std::size_t k = 0; k < pool; ++k) {
      values.push_back(1.0f);
      ids.push_back("c" + std::to_string(c) + "_" + std::to_string(k));
      owners.push_back("C" + std::to_string(c));
    }
  }
  EmbeddingMatrix m(1, values, ids, owners);
  Cluster cluster;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    cluster.member_rows.push_back(r);
    cluster.members.push_back(m.image_id(r));
  }
  const auto seed = rng();
  const auto sample = round_robin_sample(cluster, m, n, seed);
  if (sample != round_robin_sample(cluster, m, n, seed)) return "same seed gave a different sample";
  if (sample.size() != std::min(n, m.rows())) return "wrong sample size";
  std::map<std::string, std::size_t> counts;
  for (const auto& id : sample) ++counts[id.substr(0, id.find('_'))];
  std::size_t lo = n, hi = 0;
  for (std::size_t c = 0; c < companies; ++c) {
    const auto k = counts["c" + std::to_string(c)];
    lo = std::min(lo, k);
    hi = std::max(hi, k);
  }
  if (hi - lo > 1) return fail("company counts range ", lo, "..", hi);
  return std::nullopt;
}

Result visual_phash_pure(Rng& rng) {
  static support::TempDir dir("prop-phash");
  const std::size_t w = gen::uniform(rng, 1, 40), h = gen::uniform(rng, 1, 40);
  std::vector<std::uint8_t> rgb(w * h * 3);
  for (auto& v : rgb) v = static_cast<std::uint8_t>(gen::uniform(rng, 0, 255));
  const auto png = support::encode_png(w, h, rgb);
  const auto path = dir.path() / "img.png";
  std::ofstream(path, std::ios::binary) << png;
  const auto from_bytes = phash64(std::span(reinterpret_cast<const std::uint8_t*>(png.data()), png.size()));
  if (from_bytes != phash64_file(path)) return "hash of bytes differs from hash of the file";
  if (from_bytes >> 63) return "DC bit set";
  return std::nullopt;
}

// ---- stats ----------------------------------------------------------------

Result stats_entropy(Rng& rng) {
  std::vector<std::uint64_t> counts(gen::uniform(rng, 1, 10));
  for (auto& c : counts) c = gen::uniform(rng, 1, 1000);
  const double h = stats::normalized_entropy(counts);
  if (!(h >= 0.0 && h <= 1.0 + 1e-12)) return fail("entropy ", h, " outside [0,1]");
  if (std::abs(h - oracle::entropy_normalized(counts)) > 1e-12) return "entropy differs from oracle";
  auto permuted = counts;
  std::shuffle(permuted.begin(), permuted.end(), rng);
  if (std::abs(stats::normalized_entropy(permuted) - h) > 1e-12) return "entropy not permutation invariant";
  const auto factor = gen::uniform(rng, 2, 1000);
  for (auto& c : permuted) c *= factor;
  if (std::abs(stats::normalized_entropy(permuted) - h) > 1e-12) return "entropy not scale invariant";
  return std::nullopt;
}

Result stats_mw_complement(Rng& rng) {
  const std::size_t n = gen::uniform(rng, 1, 20), m = gen::uniform(rng, 1, 400 / n);
  const auto pooled = gen::distinct_values(rng, n + m);
  const std::vector<double> x(pooled.begin(), pooled.begin() + static_cast<long>(n));
  const std::vector<double> y(pooled.begin() + static_cast<long>(n), pooled.end());
  const auto less = stats::mann_whitney_u(x, y, stats::Alternative::Less);
  const auto greater = stats::mann_whitney_u(x, y, stats::Alternative::Greater);
  if (less.method != stats::TestMethod::Exact) return "tie-free small sample did not use the exact path";
  if (!(less.p_value + greater.p_value >= 1.0)) return fail("p_less + p_greater < 1 for ", show(x), show(y));

  const auto tx = gen::tied_values(rng, n), ty = gen::tied_values(rng, m);
  const auto ux = stats::mann_whitney_u(tx, ty, stats::Alternative::TwoSided).u_statistic;
  const auto uy = stats::mann_whitney_u(ty, tx, stats::Alternative::TwoSided).u_statistic;
  if (ux + uy != static_cast<double>(n * m)) return fail("U_x + U_y = ", ux + uy, " != ", n * m);
  if (ux != oracle::u_pairwise(tx, ty)) return "U differs from pair counting";
  return std::nullopt;
}

Result stats_mw_oracle(Rng& rng) {
  const std::size_t n = gen::uniform(rng, 1, 8), m = gen::uniform(rng, 1, 8);
  const auto pooled = gen::distinct_values(rng, n + m);
  const std::vector<double> x(pooled.begin(), pooled.begin() + static_cast<long>(n));
  const std::vector<double> y(pooled.begin() + static_cast<long>(n), pooled.end());
  const stats::Alternative alts[] = {stats::Alternative::Less, stats::Alternative::Greater,
                                     stats::Alternative::TwoSided};
  const auto alt = alts[gen::uniform(rng, 0, 2)];
  const double p = stats::mann_whitney_u(x, y, alt, stats::MethodChoice::Exact).p_value;
  const double expected = oracle::mann_whitney_enumeration(x, y, alt);
  if (std::abs(p - expected) > 1e-12) return fail("p ", p, " vs enumeration ", expected, " for ", show(x), show(y));
  return std::nullopt;
}

std::pair<std::vector<double>, std::vector<double>> non_constant_pair(Rng& rng) {
  for (;;) {
    const std::size_t n = gen::uniform(rng, 3, 30);
    auto x = gen::tied_values(rng, n), y = gen::tied_values(rng, n);
    auto varies = [](const std::vector<double>& v) { return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) != v.end(); };
    if (varies(x) && varies(y)) return {x, y};
  }
}

Result stats_spearman(Rng& rng) {
  auto [x, y] = non_constant_pair(rng);
  const auto a = stats::spearman(x, y), b = stats::spearman(y, x);
  if (a.rho != b.rho || a.p_value != b.p_value) return "spearman not symmetric";
  std::vector<double> fx;
  for (double v : x) fx.push_back(std::exp(v / 7.0) + 3.0 * v);
  const auto c = stats::spearman(fx, y);
  if (c.rho != a.rho) return fail("monotone transform changed rho ", a.rho, " -> ", c.rho);
  if (std::abs(a.rho - oracle::spearman_rho(x, y)) > 1e-12) return "rho differs from rank-then-Pearson oracle";
  return std::nullopt;
}

Result stats_tukey(Rng& rng) {
  const std::size_t n = gen::uniform(rng, 4, 40);
  std::vector<double> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(gen::coin(rng, 0.1) ? gen::real(rng, -500, 500) : gen::real(rng, 0, 10));
  const auto kept = stats::tukey_filter(v);
  std::size_t j = 0;
  for (std::size_t i = 0; i < v.size() && j < kept.size(); ++i) {
    if (v[i] == kept[j]) ++j;
  }
  if (j != kept.size()) return "output is not a sublist of the input";
  const auto f = stats::tukey_fences(v);
  for (double x : v) {
    const bool inside = x >= f.lower && x <= f.upper;
    if (inside != (std::count(kept.begin(), kept.end(), x) > 0)) return fail("value ", x, " misclassified");
  }
  return std::nullopt;
}

// ---- report ---------------------------------------------------------------

std::string all_reports(const CorpusStore& store, const LabelMap& labels) {
  return sector_volume_csv(sector_volume_report(store, labels)) +
         sdg_distribution_csv(sdg_distribution_report(store, labels)) +
         temporal_csv(temporal_report(store, labels)) + correlation_csv(correlation_report(store, labels)) +
         engagement_csv(engagement_report(store, labels));
}

Result report_pure(Rng& rng) {
  const auto store = random_store(rng, 40, 8);
  const auto labels = random_labels(rng, store);
  auto posts = store.posts();
  std::shuffle(posts.begin(), posts.end(), rng);
  const CorpusStore reordered(store.companies(), posts);
  if (all_reports(store, labels) != all_reports(reordered, labels)) return "reports depend on input order";
  if (all_reports(store, labels) != all_reports(store, labels)) return "reports not reproducible";
  return std::nullopt;
}

Result report_shares(Rng& rng) {
  const auto store = random_store(rng, 40, 8);
  const auto labels = random_labels(rng, store);
  for (const auto& row : sdg_distribution_report(store, labels)) {
    double sum = 0.0;
    for (double s : row.shares) {
      if (s < 0.0) return "negative share";
      sum += s;
    }
    if (std::abs(sum - 1.0) > 1e-9) return fail("shares of ", sector_name(row.sector), " sum to ", sum);
  }
  return std::nullopt;
}

Result report_temporal_totals(Rng& rng) {
  const auto store = random_store(rng, 40, 8);
  const auto labels = random_labels(rng, store);
  std::size_t total = 0, relevant = 0, expected_relevant = 0;
  for (const auto& r : temporal_report(store, labels)) {
    if (r.total == 0) return "empty quarter emitted";
    total += r.total;
    relevant += r.sdg_relevant;
  }
  for (const auto& [id, l] : labels) expected_relevant += !l.is_none();
  if (total != store.size()) return fail("quarter totals ", total, " != ", store.size());
  if (relevant != expected_relevant) return "relevant totals mismatch";
  return std::nullopt;
}

Result report_plates(Rng& rng) {
  std::vector<ClusterStats> all;
  const std::size_t n = gen::uniform(rng, 0, 12);
  const char* sectors[] = {"Energy", "Materials"};
  for (std::size_t i = 0; i < n; ++i) {
    ClusterStats s;
    s.cluster_id = static_cast<int>(i);
    s.sector = sectors[gen::uniform(rng, 0, 1)];
    s.n_companies = gen::uniform(rng, 1, 12);
    s.entropy_norm = gen::real(rng, 0.0, 1.0);
    if (gen::coin(rng, 0.9)) {
      s.delta_r = gen::real(rng, -10, 10);
      s.p_risk = gen::real(rng, 0.0, 0.2);
    }
    s.delta_e = gen::real(rng, -10, 10);
    s.p_engagement = gen::real(rng, 0.0, 0.2);
    all.push_back(s);
  }
  PlateFilters f;
  f.min_companies = gen::uniform(rng, 1, 8);
  f.min_entropy = gen::real(rng, 0.0, 0.8);
  f.top_k = gen::uniform(rng, 1, 3);
  const auto plates = plate_report(all, {}, f);
  std::set<int> ids;
  std::map<std::string, std::size_t> per_sector;
  for (const auto& p : plates) {
    const auto& s = p.stats;
    if (s.n_companies < f.min_companies) return "plate below min_companies";
    if (s.entropy_norm < f.min_entropy) return "plate below min_entropy";
    if (!ids.insert(s.cluster_id).second) return "cluster listed twice";
    if (p.selected_by.empty()) return "plate without a selecting metric";
    for (const auto& metric : p.selected_by) {
      if (metric == "delta_r" && !(s.p_risk && *s.p_risk < f.significance)) return "delta_r plate not significant";
      if (metric == "delta_e" && !(s.p_engagement < f.significance)) return "delta_e plate not significant";
    }
    if (++per_sector[s.sector] > 2 * f.top_k) return "too many plates in a sector";
  }
  return std::nullopt;
}

// ---- cli ------------------------------------------------------------------

// Writes a small random corpus and a matching config; returns the config.
RunConfig tiny_run(Rng& rng, const fs::path& dir, const fs::path& output) {
  auto table = gen::companies(rng, gen::uniform(rng, 1, 4));
  auto posts = gen::posts(rng, table, gen::uniform(rng, 1, 12));
  posts.front().text = "Clean water for all #sdg6";
  posts.front().hashtags = {"sdg6"};
  write_companies_csv(table, dir / "companies.csv");
  write_posts_jsonl(posts, dir / "posts.jsonl");

  std::vector<std::string> ids;
  for (const auto& p : posts) ids.insert(ids.end(), p.media_ids.begin(), p.media_ids.end());
  if (ids.empty()) {
    posts.front().media_ids = {"m_only"};
    write_posts_jsonl(posts, dir / "posts.jsonl");
    ids = {"m_only"};
  }
  std::normal_distribution<double> normal;
  std::vector<float> values;
  const double centre[3] = {1.0, 0.5, -0.25};
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (double c : centre) values.push_back(static_cast<float>(c + 0.05 * normal(rng)));
  }
  write_embedding_file(dir / "emb.bin", 3, values);
  std::ofstream idf(dir / "ids.txt");
  for (const auto& id : ids) idf << id << "\n";
  idf.close();

  std::ostringstream toml;
  toml << "seed = " << gen::uniform(rng, 0, 1000) << "\nworkers = 2\n[paths]\ncompanies = \"companies.csv\"\n"
       << "posts = \"posts.jsonl\"\nembeddings = \"emb.bin\"\nembedding_ids = \"ids.txt\"\noutput = \""
       << output.string() << "\"\n[cluster]\nmin_size = 2\nsample_size = 3\n[plates]\nmin_companies = 1\n"
       << "min_entropy = 0.0\n";
  for (const char* id : {"a", "b", "c"}) toml << "[[backends]]\nid = \"" << id << "\"\n";
  return parse_config(toml.str(), dir);
}

Result cli_deterministic(Rng& rng) {
  support::TempDir dir("prop-cli");
  const auto config = tiny_run(rng, dir.path(), dir.path() / "out");
  RunOptions opts{true, nullptr};
  cmd_run_all(config, opts);
  const auto first = support::read_tree(dir.path() / "out");
  cmd_run_all(config, opts);
  if (support::read_tree(dir.path() / "out") != first) return "second run-all changed the outputs";
  return std::nullopt;
}

Result cli_composition(Rng& rng) {
  support::TempDir dir("prop-cli");
  auto config = tiny_run(rng, dir.path(), dir.path() / "a");
  RunOptions opts{true, nullptr};
  cmd_run_all(config, opts);
  config.paths.output = dir.path() / "b";
  cmd_ingest(config, opts);
  cmd_annotate(config, opts);
  cmd_evaluate(config, opts);
  cmd_cluster(config, opts);
  cmd_report(config, opts);
  if (support::read_tree(dir.path() / "a") != support::read_tree(dir.path() / "b")) {
    return "run-all differs from the composed stage commands";
  }
  return std::nullopt;
}

}  // namespace

const std::vector<Property>& all() {
  static const std::vector<Property> list = {
      {"corpus", "persist/reload round trip", corpus_round_trip},
      {"corpus", "extract_hashtags idempotent", corpus_hashtag_idempotent},
      {"corpus", "engagement = likes + retweets", corpus_engagement},
      {"annotate", "parse_sdg_response total", annotate_parse_total},
      {"annotate", "vote invariant to non-tie-breaker permutation", annotate_vote_permutation},
      {"annotate", "vote closure for three annotators", annotate_vote_closure},
      {"annotate", "mock annotation reproducible across max_in_flight", annotate_reproducible},
      {"evaluate", "kappa <= 1 and kappa = 1 iff agreement = 100", evaluate_kappa_bounds},
      {"evaluate", "kappa symmetric", evaluate_kappa_symmetric},
      {"evaluate", "joint permutation invariance", evaluate_joint_permutation},
      {"evaluate", "kappa and agreement match contingency oracle", evaluate_kappa_oracle},
      {"visual", "clusters disjoint, large enough, within tau of seed", visual_cluster_invariants},
      {"visual", "clusters independent of block size and workers", visual_cluster_schedule},
      {"visual", "dedup matches brute force", visual_dedup},
      {"visual", "round-robin counts differ by at most one", visual_round_robin},
      {"visual", "phash pure function of bytes", visual_phash_pure},
      {"stats", "entropy permutation and scale invariant", stats_entropy},
      {"stats", "Mann-Whitney tail overlap and U complement", stats_mw_complement},
      {"stats", "exact Mann-Whitney matches enumeration", stats_mw_oracle},
      {"stats", "spearman symmetric and monotone invariant", stats_spearman},
      {"stats", "tukey_filter returns a sublist", stats_tukey},
      {"report", "reports pure and order independent", report_pure},
      {"report", "sdg shares non-negative and sum to one", report_shares},
      {"report", "temporal totals equal corpus size", report_temporal_totals},
      {"report", "plates respect every filter", report_plates},
      {"cli", "run-all byte-identical across invocations", cli_deterministic},
      {"cli", "run-all equals composed stage commands", cli_composition},
  };
  return list;
}

Outcome run(const Property& property, std::uint64_t seed) {
  Outcome out{property.module, property.name};
  for (std::size_t i = 0; i < property.cases; ++i) {
    std::seed_seq seq{seed, static_cast<std::uint64_t>(i), std::hash<std::string>{}(property.name)};
    Rng rng(seq);
    Result r;
    try {
      r = property.check(rng);
    } catch (const std::exception& e) {
      r = std::string("exception: ") + e.what();
    }
    ++out.cases;
    if (r) {
      if (out.failures++ == 0) out.first_failure = "case " + std::to_string(i) + ": " + *r;
    }
  }
  return out;
}

}  // namespace props
