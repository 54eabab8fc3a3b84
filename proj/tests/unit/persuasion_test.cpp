#include "da/persuasion.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <memory>
#include <set>
#include <string>
#include <vector>

using namespace da;

namespace {

const std::vector<std::string> kPrinciples = {
    "Keep it simple and crisp.",
    "Provide direct, reliable advice without resorting to commands or demands.",
    "Avoid emphasizing bad consequences.",
    "Be colloquial, avoiding seriousness, like people's everyday conversations.",
};

const std::vector<std::pair<Strategy, std::string>> kDescriptions = {
    {Strategy::status_feedback,
     "Timely reminders and environmental hazard feedback to attract attention (UI)."},
    {Strategy::emphasize_risk,
     "Enhance driver alertness and improve response time between action and readiness."},
    {Strategy::default_concern, "Simplify task steps to facilitate decision-making."},
    {Strategy::reliable_advice,
     "Guide the driver to focus on risky matters based on the scenario and driver condition."},
    {Strategy::social_connection,
     "Establish connections, evoke a sense of communication to maintain safety jointly."},
    {Strategy::social_interaction,
     "Emotional expression, intuitive reflection; Give encouragement and reward."},
};

std::vector<RiskFactorState> sample_states() {
  std::vector<RiskFactorState> out;
  for (int road = 0; road < 4; ++road)
    for (int light = 0; light < 4; ++light)
      for (int weather = 0; weather < 3; ++weather)
        for (int level = 0; level <= 3; level += 3)
          out.push_back({level, level, static_cast<RoadCondition>(road),
                         static_cast<Lighting>(light), static_cast<Weather>(weather)});
  return out;
}

class FixedLlm : public LlmClient {
 public:
  explicit FixedLlm(std::string reply) : reply_(std::move(reply)) {}
  std::string complete(std::string_view) override { return reply_; }

 private:
  std::string reply_;
};

class ThrowingLlm : public LlmClient {
 public:
  explicit ThrowingLlm(int which) : which_(which) {}
  std::string complete(std::string_view) override {
    switch (which_) {
      case 0:
        throw LlmTimeout("t");
      case 1:
        throw LlmAuthError("a");
      case 2:
        throw LlmRateLimited("r");
      case 3:
        throw LlmProtocolError("p");
      default:
        throw LlmTransportError("x");
    }
  }

 private:
  int which_;
};

const RiskFactorState kHigh{3, 2, RoadCondition::congested_surface, Lighting::dark, Weather::clear};
const RiskFactorState kLow{1, 1, RoadCondition::wet, Lighting::gloomy, Weather::rain};

}  // namespace

TEST(Strategy, ElementsPairUp) {
  EXPECT_EQ(element_of(Strategy::status_feedback), PersuasionElement::remind_unreasonable);
  EXPECT_EQ(element_of(Strategy::emphasize_risk), PersuasionElement::remind_unreasonable);
  EXPECT_EQ(element_of(Strategy::default_concern), PersuasionElement::improve_execution);
  EXPECT_EQ(element_of(Strategy::reliable_advice), PersuasionElement::improve_execution);
  EXPECT_EQ(element_of(Strategy::social_connection), PersuasionElement::increase_motivation);
  EXPECT_EQ(element_of(Strategy::social_interaction), PersuasionElement::increase_motivation);
  for (const auto s : kAllStrategies) {
    EXPECT_NE(sibling_of(s), s);
    EXPECT_EQ(element_of(sibling_of(s)), element_of(s));
    EXPECT_EQ(sibling_of(sibling_of(s)), s);
  }
}

TEST(Strategy, WireNamesRoundTrip) {
  EXPECT_EQ(to_string(Strategy::social_interaction), "SocialInteraction");
  for (const auto s : kAllStrategies) EXPECT_EQ(strategy_from_string(to_string(s)), s);
  EXPECT_THROW(strategy_from_string("Nagging"), std::invalid_argument);
}

TEST(Strategy, DescriptionsVerbatim) {
  for (const auto& [s, text] : kDescriptions) EXPECT_EQ(strategy_description(s), text);
}

TEST(Principles, FourVerbatim) {
  const auto& p = persuasion_principles();
  ASSERT_EQ(p.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(p[i], kPrinciples[i]);
}

TEST(SelectStrategy, RiskMapping) {
  EXPECT_EQ(select_strategy(RiskLevel::high, 6.7, {}, 0), Strategy::emphasize_risk);
  EXPECT_EQ(select_strategy(RiskLevel::medium, 4.0, {}, 0), Strategy::reliable_advice);
  EXPECT_EQ(select_strategy(RiskLevel::low, 5.0, {}, 0), Strategy::status_feedback);
  EXPECT_EQ(select_strategy(RiskLevel::none, 6.7, {}, 0), Strategy::default_concern);
  EXPECT_EQ(select_strategy(RiskLevel::none, 3.8, {}, 0), Strategy::social_connection);
}

TEST(SelectStrategy, AntiRepetition) {
  const std::vector<Strategy> h = {Strategy::emphasize_risk};
  EXPECT_EQ(select_strategy(RiskLevel::high, 6.7, h, 0), Strategy::status_feedback);
}

TEST(SelectStrategy, OnlyLastEntryMatters) {
  const std::vector<Strategy> h = {Strategy::emphasize_risk, Strategy::reliable_advice};
  EXPECT_EQ(select_strategy(RiskLevel::high, 6.7, h, 0), Strategy::emphasize_risk);
}

TEST(SelectStrategy, FocusedStreakGivesEncouragement) {
  EXPECT_EQ(select_strategy(RiskLevel::none, 0.0, {}, 300), Strategy::social_interaction);
  EXPECT_EQ(select_strategy(RiskLevel::high, 0.0, {}, 120), Strategy::social_interaction);
  EXPECT_NE(select_strategy(RiskLevel::none, 0.0, {}, 119.9), Strategy::social_interaction);
  EXPECT_NE(select_strategy(RiskLevel::none, 0.1, {}, 300), Strategy::social_interaction);
}

TEST(SelectStrategyProperty, NeverRepeatsLastStrategy) {
  for (const auto r : kAllRiskLevels) {
    for (const double score : {0.0, 3.8, 6.7, 10.0}) {
      for (const double streak : {0.0, 150.0}) {
        for (const auto last : kAllStrategies) {
          const std::vector<Strategy> h = {last};
          const auto s = select_strategy(r, score, h, streak);
          EXPECT_NE(s, last);
          const auto fresh = select_strategy(r, score, {}, streak);
          EXPECT_TRUE(s == fresh || s == sibling_of(fresh));
        }
      }
    }
  }
}

TEST(BuildPrompt, ContainsPartsInOrder) {
  const std::string driver = "[t=905.0] tasks=smartphone score=6.7";
  const auto p = build_prompt(kHigh, 905.0, driver, Strategy::emphasize_risk);
  const auto persona = p.find("driving assistant");
  const auto p1 = p.find(kPrinciples[0]);
  const auto p4 = p.find(kPrinciples[3]);
  const auto desc = p.find("Enhance driver alertness");
  const auto road = p.find(serialize_timestamped(kHigh, 905.0));
  const auto drv = p.find(driver);
  const auto instr = p.find("one short sentence");
  for (const auto pos : {persona, p1, p4, desc, road, drv, instr}) ASSERT_NE(pos, std::string::npos);
  EXPECT_LT(persona, p1);
  EXPECT_LT(p1, p4);
  EXPECT_LT(p4, desc);
  EXPECT_LT(desc, road);
  EXPECT_LT(road, drv);
  EXPECT_LT(drv, instr);
}

TEST(BuildPrompt, DeterministicBytes) {
  const auto a = build_prompt(kLow, 310.0, "[t=310.0] tasks=none score=0.0", Strategy::status_feedback);
  const auto b = build_prompt(kLow, 310.0, "[t=310.0] tasks=none score=0.0", Strategy::status_feedback);
  EXPECT_EQ(a, b);
}

TEST(BuildPromptProperty, AllPrinciplesForEveryStrategy) {
  for (const auto s : kAllStrategies) {
    const auto p = build_prompt(kLow, 1.0, "[t=1.0] tasks=none score=0.0", s);
    for (const auto& principle : kPrinciples) EXPECT_NE(p.find(principle), std::string::npos);
    EXPECT_NE(p.find(std::string(strategy_description(s))), std::string::npos);
  }
}

TEST(PersuasionMessage, LengthBoundEnforced) {
  EXPECT_THROW(PersuasionMessage("", Channel::both, Strategy::status_feedback, 0, MessageSource::llm),
               std::length_error);
  EXPECT_THROW(PersuasionMessage(std::string(201, 'a'), Channel::both, Strategy::status_feedback, 0,
                                 MessageSource::llm),
               std::length_error);
  EXPECT_NO_THROW(PersuasionMessage(std::string(200, 'a'), Channel::both,
                                    Strategy::status_feedback, 0, MessageSource::llm));
}

TEST(PersuasionMessage, CountsCodePointsNotBytes) {
  std::string text;
  for (int i = 0; i < 200; ++i) text += "\xC3\xA9";  // 200 x U+00E9
  EXPECT_EQ(utf8_length(text), 200u);
  EXPECT_NO_THROW(
      PersuasionMessage(text, Channel::visual, Strategy::status_feedback, 0, MessageSource::llm));
}

TEST(PersuasionMessage, JsonRecord) {
  const PersuasionMessage m("Eyes up for a sec?", Channel::both, Strategy::reliable_advice, 12.5,
                            MessageSource::template_table);
  EXPECT_EQ(to_json(m).dump(),
            R"({"channel":"both","source":"template","strategy":"ReliableAdvice","t":12.5,"text":"Eyes up for a sec?"})");
}

TEST(ValidateMessage, FriendlySuggestionIsValid) {
  EXPECT_TRUE(validate_message("Rain's picking up \xE2\x80\x94 maybe take a peek at the road?").empty());
}

TEST(ValidateMessage, CommandTokensFlagged) {
  const auto v = validate_message("You MUST stop texting immediately");
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].kind, ViolationKind::blacklisted);
  EXPECT_EQ(v[1].kind, ViolationKind::blacklisted);
  std::set<std::string> details;
  for (const auto& x : v) details.insert(x.detail);
  EXPECT_TRUE(details.count("must"));
  EXPECT_TRUE(details.count("immediately"));
}

TEST(ValidateMessage, Empty) {
  const auto v = validate_message("");
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, ViolationKind::empty);
  EXPECT_EQ(validate_message("   ")[0].kind, ViolationKind::empty);
}

TEST(ValidateMessage, LengthAndWordLimits) {
  std::string long_text(201, 'x');
  EXPECT_EQ(validate_message(long_text)[0].kind, ViolationKind::too_long);
  std::string many;
  for (int i = 0; i < 26; ++i) many += "ok ";
  const auto v = validate_message(many);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, ViolationKind::too_many_words);
}

TEST(ValidateMessage, WholeWordMatching) {
  EXPECT_TRUE(validate_message("Fancy some mustard later?").empty());
  EXPECT_TRUE(validate_message("Keep an eye on the diesel truck.").empty());
  EXPECT_FALSE(validate_message("Danger! Look up.").empty());
}

TEST(MessageRules, JsonRoundTripAndShippedFile) {
  const MessageRules r;
  EXPECT_EQ(to_json(message_rules_from_json(to_json(r))), to_json(r));
  std::ifstream in(DA_SOURCE_DIR "/config/message_rules.json");
  ASSERT_TRUE(in);
  EXPECT_EQ(to_json(message_rules_from_json(nlohmann::json::parse(in))), to_json(r));
}

TEST(TemplateTable, EveryEntryRenderValidForEveryWeather) {
  const TemplateTable table;
  int checked = 0;
  for (const auto s : kAllStrategies) {
    for (const auto r : kAllRiskLevels) {
      for (int w = 0; w < 3; ++w) {
        const auto text = table.render(s, r, static_cast<Weather>(w));
        EXPECT_TRUE(validate_message(text).empty()) << text;
        EXPECT_EQ(text.find('{'), std::string::npos) << text;
        ++checked;
      }
    }
  }
  EXPECT_EQ(checked, 72);
}

TEST(TemplateTable, EntriesAreDistinctPerStrategy) {
  const TemplateTable table;
  std::set<std::string> all;
  for (const auto s : kAllStrategies)
    for (const auto r : kAllRiskLevels) all.insert(table.entry(s, r));
  EXPECT_EQ(all.size(), 24u);
}

TEST(TemplateTable, JsonRoundTripAndShippedFile) {
  const TemplateTable table;
  EXPECT_EQ(TemplateTable::from_json(table.to_json()).to_json(), table.to_json());
  EXPECT_EQ(load_template_table_file(DA_SOURCE_DIR "/config/templates.json").to_json(),
            table.to_json());
}

TEST(TemplateTable, FromJsonRejectsInvalidEntriesKeepsDefaults) {
  auto doc = TemplateTable{}.to_json();
  doc["EmphasizeRisk"]["high"] = "You must stop now.";
  EXPECT_THROW(TemplateTable::from_json(doc), std::invalid_argument);
  auto partial = TemplateTable{}.to_json();
  partial["StatusFeedback"].erase("low");
  EXPECT_EQ(TemplateTable::from_json(partial).entry(Strategy::status_feedback, RiskLevel::low),
            TemplateTable{}.entry(Strategy::status_feedback, RiskLevel::low));
}

TEST(FallbackTemplate, TableLookupByRiskAndWeather) {
  const TemplateTable table;
  EXPECT_EQ(fallback_template(Strategy::emphasize_risk, kHigh),
            table.render(Strategy::emphasize_risk, RiskLevel::high, Weather::clear));
  EXPECT_EQ(fallback_template(Strategy::emphasize_risk, kHigh),
            fallback_template(Strategy::emphasize_risk, kHigh));
}

TEST(FallbackTemplate, WeatherPhraseSubstituted) {
  TemplateTable table;
  table.set(Strategy::status_feedback, RiskLevel::low, "Heads up, {weather} out there.");
  EXPECT_EQ(fallback_template(Strategy::status_feedback, kLow, table),
            "Heads up, " + std::string(weather_phrase(Weather::rain)) + " out there.");
}

TEST(CleanCompletion, TrimsWhitespaceAndQuotes) {
  EXPECT_EQ(clean_completion("  \"Eyes up?\"\n"), "Eyes up?");
  EXPECT_EQ(clean_completion("plain"), "plain");
  EXPECT_EQ(clean_completion("\"\""), "");
}

TEST(Generate, LlmPassThrough) {
  FixedLlm llm("Heavy rain ahead, maybe set the phone down for a bit?");
  const auto m = generate("prompt", llm, Strategy::status_feedback, kLow, 310.0);
  EXPECT_EQ(m.source, MessageSource::llm);
  EXPECT_EQ(m.channel, Channel::both);
  EXPECT_EQ(m.text, "Heavy rain ahead, maybe set the phone down for a bit?");
  EXPECT_DOUBLE_EQ(m.t, 310.0);
}

TEST(Generate, TimeoutFallsBackToTemplate) {
  ThrowingLlm llm(0);
  const auto m = generate("prompt", llm, Strategy::status_feedback, kLow, 310.0);
  EXPECT_EQ(m.source, MessageSource::template_table);
  EXPECT_EQ(m.text, fallback_template(Strategy::status_feedback, kLow));
}

TEST(Generate, OversizeFallsBackToTemplate) {
  FixedLlm llm(std::string(500, 'r'));
  const auto m = generate("prompt", llm, Strategy::emphasize_risk, kHigh, 1.0);
  EXPECT_EQ(m.source, MessageSource::template_table);
}

TEST(Generate, BlacklistedFallsBackToTemplate) {
  FixedLlm llm("You must put the phone away immediately.");
  EXPECT_EQ(generate("p", llm, Strategy::emphasize_risk, kHigh, 1.0).source,
            MessageSource::template_table);
}

TEST(GenerateProperty, TotalOverLlmBehaviours) {
  std::vector<std::unique_ptr<LlmClient>> clients;
  for (int i = 0; i < 5; ++i) clients.push_back(std::make_unique<ThrowingLlm>(i));
  clients.push_back(std::make_unique<FixedLlm>(""));
  clients.push_back(std::make_unique<FixedLlm>("garbage \x01\x02"));
  clients.push_back(std::make_unique<FixedLlm>(std::string(500, 'x')));
  clients.push_back(std::make_unique<FixedLlm>("Could you glance at the road for me?"));
  for (const auto mode : {MockMode::echo, MockMode::scripted, MockMode::fail, MockMode::oversize}) {
    clients.push_back(mock_client(mode));
  }
  for (auto& c : clients) {
    for (const auto s : kAllStrategies) {
      for (const auto& st : sample_states()) {
        const auto m = generate(build_prompt(st, 5.0, "[t=5.0] tasks=none score=0.0", s), *c, s, st, 5.0);
        EXPECT_TRUE(validate_message(m.text).empty()) << m.text;
        EXPECT_EQ(m.strategy, s);
        EXPECT_EQ(m.channel, Channel::both);
      }
    }
  }
}
