#include "advicl/synthetic_backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <thread>

#include "advicl/errors.hpp"
#include "advicl/prompt.hpp"
#include "advicl/text.hpp"

namespace advicl {

namespace {

constexpr std::string_view kWrapLine = "Wrap each with <START> and <END>.";

std::size_t find_last_line_tag(std::string_view s, std::string_view tag) {
  std::size_t pos = s.rfind(tag);
  while (pos != std::string_view::npos) {
    if (pos == 0 || s[pos - 1] == '\n') return pos;
    if (pos == 0) break;
    pos = s.rfind(tag, pos - 1);
  }
  return std::string_view::npos;
}

double sum_present(std::string_view haystack, const std::vector<WeightedPhrase>& phrases) {
  const std::string lower = text::to_lower(haystack);
  double total = 0.0;
  for (const auto& p : phrases) {
    if (lower.find(text::to_lower(p.phrase)) != std::string::npos) total += p.weight;
  }
  return total;
}

double log_sigmoid(double z) { return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

// First run of digits in s, or `fallback`.
int first_integer(std::string_view s, int fallback) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (std::isdigit(static_cast<unsigned char>(s[i]))) {
      int v = 0;
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) v = v * 10 + (s[i++] - '0');
      return v;
    }
  }
  return fallback;
}

std::string erase_ci(std::string_view s, std::string_view phrase) {
  const std::string lower = text::to_lower(s);
  const std::size_t pos = lower.find(text::to_lower(phrase));
  if (pos == std::string::npos) return std::string(s);
  std::string out = std::string(s.substr(0, pos)) + std::string(s.substr(pos + phrase.size()));
  // tidy the sentence fragment left behind
  std::string tidy;
  for (char c : out) {
    if (c == ' ' && !tidy.empty() && tidy.back() == ' ') continue;
    tidy.push_back(c);
  }
  while (tidy.find(" .") != std::string::npos) tidy.erase(tidy.find(" ."), 1);
  while (tidy.find("..") != std::string::npos) tidy.erase(tidy.find(".."), 1);
  return text::trim(tidy);
}

std::string capitalised_sentence(std::string_view phrase) {
  std::string s(phrase);
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s + ".";
}

}  // namespace

SyntheticBackend::SyntheticBackend(SyntheticConfig config) : config_(std::move(config)) {
  descriptor_ = {config_.id, BackendKind::Synthetic, std::nullopt, std::nullopt};
  for (const auto& p : config_.quality_phrases) phrase_pool_.push_back(p.phrase);
  for (const auto& p : config_.detection_phrases) phrase_pool_.push_back(p.phrase);
  for (const auto& p : config_.neutral_phrases) phrase_pool_.push_back(p);
  if (config_.filler_words.empty()) throw ConfigError("synthetic backend needs at least one filler word");
  if (config_.fixed_real_probability &&
      !(*config_.fixed_real_probability > 0.0 && *config_.fixed_real_probability < 1.0)) {
    throw ConfigError("fixed_real_probability must lie strictly inside (0, 1)");
  }
}

void SyntheticBackend::simulate_latency() const {
  if (config_.latency.count() > 0) std::this_thread::sleep_for(config_.latency);
}

double SyntheticBackend::quality_of(std::string_view prefix) const {
  return std::clamp(config_.base_quality + sum_present(prefix, config_.quality_phrases), 0.0, 1.0);
}

double SyntheticBackend::detectability_of(std::string_view prefix) const {
  return std::clamp(sum_present(prefix, config_.detection_phrases), 0.0, config_.detection_cap);
}

std::string SyntheticBackend::reference_for(std::string_view input) const {
  const std::string key = text::trim(input);
  if (auto it = config_.references.find(key); it != config_.references.end()) return it->second;
  auto tokens = text::split_whitespace(key);
  std::reverse(tokens.begin(), tokens.end());
  return text::join(tokens, " ");
}

Completion SyntheticBackend::complete(std::string_view prompt, const GenerationParams& params) {
  params.validate();
  if (text::trim(prompt).empty()) throw InvalidArgument("prompt must be nonempty");
  simulate_latency();
  const bool modifier =
      (prompt.starts_with("Generate ") || prompt.starts_with("Write ")) && prompt.find(kWrapLine) != std::string_view::npos;
  std::string out = modifier ? generate_variants(prompt, params) : generate_answer(prompt, params);

  auto tokens = text::split_whitespace(out);
  if (static_cast<int>(tokens.size()) > params.max_tokens) {
    tokens.resize(static_cast<std::size_t>(params.max_tokens));
    out = text::join(tokens, " ");
  }
  std::vector<TokenLogprob> lps;
  for (const auto& t : tokens) {
    lps.push_back({t, -0.05 - 2.0 * text::unit_interval(text::fnv1a64(t))});
  }
  return {std::move(out), std::move(lps)};
}

std::string SyntheticBackend::generate_answer(std::string_view prompt, const GenerationParams& params) const {
  const std::uint64_t seed = static_cast<std::uint64_t>(params.seed.value_or(0));
  const std::size_t in = find_last_line_tag(prompt, templates::kInputTag);
  std::string_view tail = in == std::string_view::npos ? prompt : prompt.substr(in + templates::kInputTag.size());
  std::string_view prefix = in == std::string_view::npos ? std::string_view{} : prompt.substr(0, in);
  const std::size_t out_tag = tail.rfind(templates::kOutputTag);
  std::string_view input = out_tag == std::string_view::npos ? tail : tail.substr(0, out_tag);

  const std::string x = text::trim(input);
  const double q = quality_of(prefix);
  const auto reference = text::split_whitespace(reference_for(x));
  std::vector<std::string> out;
  out.reserve(reference.size());
  const std::uint64_t base = text::hash_combine(text::fnv1a64(x), seed);
  for (std::size_t j = 0; j < reference.size(); ++j) {
    const std::uint64_t h = text::hash_combine(base, j);
    if (text::unit_interval(h) < 1.0 - q) {
      out.push_back(config_.filler_words[text::mix64(h) % config_.filler_words.size()]);
    } else {
      out.push_back(reference[j]);
    }
  }
  if (out.empty()) out.push_back(config_.filler_words[base % config_.filler_words.size()]);
  return text::join(out, " ");
}

std::string SyntheticBackend::generate_variants(std::string_view prompt, const GenerationParams& params) const {
  const std::size_t first_break = prompt.find('\n');
  const std::string_view header = prompt.substr(0, first_break);
  const int requested = first_integer(header, 5);
  const int count = std::max(0, requested - config_.span_shortfall);

  std::string content;
  bool demo = false;
  if (prompt.starts_with("Write for me ")) {
    // instruction paraphrase: "Write for me N paraphrases of the <instruction>:\n<wrap line>"
    constexpr std::string_view kOf = "paraphrases of the ";
    const std::size_t b = prompt.find(kOf);
    const std::size_t e = prompt.rfind(std::string(":\n") + std::string(kWrapLine));
    if (b != std::string_view::npos && e != std::string_view::npos && e > b) {
      content = text::trim(prompt.substr(b + kOf.size(), e - b - kOf.size()));
    }
  } else {
    const std::size_t gap = prompt.find("\n\n");
    content = gap == std::string_view::npos ? std::string{} : text::trim(prompt.substr(gap + 2));
    demo = header.find("instruction") == std::string_view::npos;
  }
  if (content.empty()) return "I could not find anything to rewrite.";

  const std::uint64_t base =
      text::hash_combine(text::fnv1a64(prompt), static_cast<std::uint64_t>(params.seed.value_or(0)));
  std::string out;
  std::vector<std::string> seen;
  for (int i = 0; i < count; ++i) {
    std::uint64_t h = text::hash_combine(base, static_cast<std::uint64_t>(i));
    std::string v = demo ? vary_demo(content, h) : vary_instruction(content, h);
    // redraw a few times to keep the spans distinct
    for (int redraw = 0; redraw < 32 && std::find(seen.begin(), seen.end(), v) != seen.end(); ++redraw) {
      h = text::mix64(h + 1);
      v = demo ? vary_demo(content, h) : vary_instruction(content, h);
    }
    seen.push_back(v);
    out += "<START>" + v + "<END>\n";
  }
  return out;
}

std::string SyntheticBackend::vary_instruction(std::string_view content, std::uint64_t h) const {
  const double op = text::unit_interval(h);
  const std::uint64_t pick = text::mix64(h ^ 0x5bd1e995ULL);
  if (op < 0.25) {
    // drop a known phrase if the content has one
    std::vector<std::string> present;
    for (const auto& p : phrase_pool_) {
      if (text::contains_ci(content, p)) present.push_back(p);
    }
    if (!present.empty()) {
      std::string s = erase_ci(content, present[pick % present.size()]);
      if (!s.empty()) return s;
    }
  }
  const std::string& phrase = phrase_pool_.empty() ? config_.neutral_phrases.front() : phrase_pool_[pick % phrase_pool_.size()];
  if (op < 0.4) return capitalised_sentence(phrase) + " " + std::string(content);
  return std::string(content) + " " + capitalised_sentence(phrase);
}

std::string SyntheticBackend::vary_demo(std::string_view content, std::uint64_t h) const {
  std::string input;
  std::string output;
  try {
    const Demonstration d = parse_demo_block(content);
    input = d.input();
    output = d.output();
  } catch (const MalformedDemoContent&) {
    input = text::trim(content);
  }
  const std::uint64_t pick = text::mix64(h ^ 0x27d4eb2fULL);
  const std::string& phrase = phrase_pool_[pick % phrase_pool_.size()];
  std::string varied_input = input + " (" + phrase + ")";
  if (text::unit_interval(text::mix64(h)) < config_.malformed_demo_rate || output.empty()) {
    return "Input: " + varied_input;
  }
  return "Input: " + varied_input + "\nOutput: " + output;
}

std::vector<double> SyntheticBackend::option_logprobs(std::string_view prompt, std::span<const std::string> options) {
  option_leading_tokens(options);
  if (text::trim(prompt).empty()) throw InvalidArgument("prompt must be nonempty");
  simulate_latency();

  double z = 0.0;
  if (config_.fixed_real_probability) {
    const double p = *config_.fixed_real_probability;
    z = std::log(p) - std::log1p(-p);
  } else {
    const std::size_t in = find_last_line_tag(prompt, templates::kInputTag);
    if (in == std::string_view::npos) throw ProviderError(400, "discriminator prompt has no query block");
    const std::string_view prefix = prompt.substr(0, in);
    std::string_view query = prompt.substr(in + templates::kInputTag.size());
    const std::size_t out = query.find(std::string("\n") + std::string(templates::kOutputTag));
    const std::size_t question = query.find(std::string("\n") + std::string(templates::kQuestionLine));
    if (out == std::string_view::npos || question == std::string_view::npos || question < out) {
      throw ProviderError(400, "discriminator prompt query block is malformed");
    }
    const std::string x = text::trim(query.substr(0, out));
    const std::string y = text::trim(query.substr(out + 1 + templates::kOutputTag.size(),
                                                  question - out - 1 - templates::kOutputTag.size()));
    const auto cand = text::split_whitespace(text::to_lower(y));
    const auto ref = text::split_whitespace(text::to_lower(reference_for(x)));
    double genuineness = 0.0;
    if (!cand.empty() && !ref.empty()) {
      const double l = static_cast<double>(text::lcs_length(cand, ref));
      genuineness = l == 0.0 ? 0.0 : 2.0 * l / static_cast<double>(cand.size() + ref.size());
    }
    const double offset = config_.offset_amplitude * (2.0 * text::unit_interval(text::fnv1a64(prefix)) - 1.0);
    z = config_.alpha * (1.0 + detectability_of(prefix)) * (genuineness - config_.tau) + offset;
  }
  // first option is "real"; any further options share the complement mass
  std::vector<double> out(options.size());
  out[0] = log_sigmoid(z);
  const double rest = log_sigmoid(-z) - std::log(static_cast<double>(options.size() - 1));
  for (std::size_t i = 1; i < out.size(); ++i) out[i] = rest;
  return out;
}

std::vector<TokenLogprob> SyntheticBackend::score_text(std::string_view t) {
  simulate_latency();
  std::vector<TokenLogprob> out;
  for (const auto& tok : text::split_whitespace(t)) {
    out.push_back({tok, -0.05 - 3.0 * text::unit_interval(text::fnv1a64(text::to_lower(tok)))});
  }
  return out;
}

double synthetic_prompt_quality(const SyntheticBackend& backend, const GeneratorPrompt& prompt) {
  // the prefix the generator sees before its query block
  const std::string rendered = render_generator_prompt(prompt, "x");
  const std::size_t cut = rendered.rfind(templates::kInputTag);
  return backend.quality_of(std::string_view(rendered).substr(0, cut));
}

namespace {
std::vector<WeightedPhrase> phrases_from_json(const nlohmann::json& j) {
  std::vector<WeightedPhrase> out;
  for (const auto& p : j) out.push_back({p.at("phrase").get<std::string>(), p.at("weight").get<double>()});
  return out;
}
nlohmann::json phrases_to_json(const std::vector<WeightedPhrase>& ps) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : ps) out.push_back({{"phrase", p.phrase}, {"weight", p.weight}});
  return out;
}
}  // namespace

SyntheticConfig synthetic_config_from_json(const nlohmann::json& j) {
  SyntheticConfig c;
  if (j.is_null()) return c;
  c.id = j.value("id", c.id);
  c.base_quality = j.value("base_quality", c.base_quality);
  if (j.contains("quality_phrases")) c.quality_phrases = phrases_from_json(j.at("quality_phrases"));
  if (j.contains("detection_phrases")) c.detection_phrases = phrases_from_json(j.at("detection_phrases"));
  c.neutral_phrases = j.value("neutral_phrases", c.neutral_phrases);
  c.filler_words = j.value("filler_words", c.filler_words);
  c.alpha = j.value("alpha", c.alpha);
  c.tau = j.value("tau", c.tau);
  c.detection_cap = j.value("detection_cap", c.detection_cap);
  c.offset_amplitude = j.value("offset_amplitude", c.offset_amplitude);
  if (j.contains("fixed_real_probability") && !j.at("fixed_real_probability").is_null()) {
    c.fixed_real_probability = j.at("fixed_real_probability").get<double>();
  }
  if (j.contains("references")) c.references = j.at("references").get<std::map<std::string, std::string>>();
  c.span_shortfall = j.value("span_shortfall", c.span_shortfall);
  c.malformed_demo_rate = j.value("malformed_demo_rate", c.malformed_demo_rate);
  c.latency = std::chrono::microseconds(j.value("latency_us", 0LL));
  return c;
}

nlohmann::json to_json(const SyntheticConfig& c) {
  return {{"id", c.id},
          {"base_quality", c.base_quality},
          {"quality_phrases", phrases_to_json(c.quality_phrases)},
          {"detection_phrases", phrases_to_json(c.detection_phrases)},
          {"neutral_phrases", c.neutral_phrases},
          {"filler_words", c.filler_words},
          {"alpha", c.alpha},
          {"tau", c.tau},
          {"detection_cap", c.detection_cap},
          {"offset_amplitude", c.offset_amplitude},
          {"fixed_real_probability",
           c.fixed_real_probability ? nlohmann::json(*c.fixed_real_probability) : nlohmann::json(nullptr)},
          {"references", c.references},
          {"span_shortfall", c.span_shortfall},
          {"malformed_demo_rate", c.malformed_demo_rate},
          {"latency_us", static_cast<long long>(c.latency.count())}};
}

}  // namespace advicl
