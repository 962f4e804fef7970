#pragma once

#include <string>

// Canonical prompt texts for the ranker, judge, and planner agents. The user
// templates carry two placeholders: the FAQ list marker ("[List of FAQs...]"
// or "[List of FAQs with answers...]") and "{user_utterance}".

namespace faqmap::prompting::texts {

extern const std::string kRankerSystemNoAnswers;
extern const std::string kRankerSystemWithAnswers;
extern const std::string kRankerUserNoAnswers;
extern const std::string kRankerUserWithAnswers;

extern const std::string kJudgeSystem;
extern const std::string kJudgeInstructions;

extern const std::string kPlannerSystem;
extern const std::string kPlannerUser;

extern const std::string kFaqListMarkerNoAnswers;
extern const std::string kFaqListMarkerWithAnswers;
extern const std::string kUtteranceMarker;

}  // namespace faqmap::prompting::texts
