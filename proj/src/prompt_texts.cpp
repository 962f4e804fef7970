#include "faqmap/prompt_texts.hpp"

namespace faqmap::prompting::texts {

const std::string kFaqListMarkerNoAnswers = "[List of FAQs...]";
const std::string kFaqListMarkerWithAnswers = "[List of FAQs with answers...]";
const std::string kUtteranceMarker = "{user_utterance}";

const std::string kRankerSystemNoAnswers =
    R"__(You are an expert FAQ annotation system for our banking application. Your role is to accurately map user utterances to the most relevant FAQs from the bank's knowledge base.
IMPORTANT GUIDELINES:
1. Analyze the user's intent thoroughly
2. Match the intent to the most relevant FAQs
3. Rank FAQs by relevance (0-100 scale)
4. Provide clear reasoning for each match
5. Return exactly 5 FAQs unless there are fewer relevant ones
6. Be precise - banking customers need accurate information)__";

const std::string kRankerSystemWithAnswers =
    R"__(You are an expert FAQ annotation system for our banking application. Your role is to accurately map user utterances to the most relevant FAQs from the bank's knowledge base.
IMPORTANT GUIDELINES:
1. Analyze the user's intent thoroughly
2. Match the intent to the most relevant FAQs based on both the FAQ question and its answer content
3. Rank FAQs by relevance (0-100 scale)
4. Provide clear reasoning for each match, considering the full context of the FAQ including its answer
5. Return exactly 5 FAQs unless there are fewer relevant ones
6. Be precise - banking customers need accurate information)__";

const std::string kRankerUserNoAnswers =
    R"__(You will be given a user utterance and a list of available FAQs. Your task is to:
1. Analyze what the user is truly asking about (identify the core intent)
2. Search through the available FAQs for relevant matches
3. Rank the top 5 most relevant FAQs based on:
    - Semantic similarity to the user's intent
    - Specificity to the question
    - Likelihood of containing the information the user needs
4. Provide a confidence score (0-100) for each match
5. Explain your reasoning process
For banking-related queries, consider:
- Security concerns take priority
- Account access questions require specific authentication-related FAQs
- Transaction questions should match to relevant transaction FAQs
- General inquiries should match to general information FAQs
You must produce your analysis as a JSON object according to the following schema:
{
"user_utterance": "The original user utterance",
"intent_analysis": "A thorough analysis of what the user is asking for, including likely underlying needs",
"primary_banking_category": "The main banking category this query falls under (Account Management, Security, Transactions, etc.)",
"relevant_faqs": [
{
"faq": "The title of the FAQ",
"relevance_score": 95,
"reasoning": "Detailed explanation of why this FAQ is relevant to the user's query"
},
...
],
"confidence_in_mapping": "HIGH/MEDIUM/LOW",
"explanation_of_confidence": "Brief explanation of why you're confident or uncertain about these mappings",
"recommended_clarification_question": "If confidence is MEDIUM or LOW, provide a question that would help clarify the user's intent"
}
If there are fewer than 5 relevant FAQs, only include those that are actually relevant.
Available FAQs:
[List of FAQs...]
User Utterance: "{user_utterance}")__";

const std::string kRankerUserWithAnswers =
    R"__(You will be given a user utterance and a list of available FAQs with their answers. Your task is to:
1. Analyze what the user is truly asking about (identify the core intent)
2. Search through the available FAQs for relevant matches
3. Rank the top 5 most relevant FAQs based on:
    - Semantic similarity to the user's intent
    - Specificity to the question
    - Whether the answer content directly addresses the user's needs
    - Likelihood of containing the information the user needs
4. Provide a confidence score (0-100) for each match
5. Explain your reasoning process
For banking-related queries, consider:
- Security concerns take priority
- Account access questions require specific authentication-related FAQs
- Transaction questions should match to relevant transaction FAQs
- General inquiries should match to general information FAQs
You must produce your analysis as a JSON object according to the following schema:
{
"user_utterance": "The original user utterance",
"intent_analysis": "A thorough analysis of what the user is asking for, including likely underlying needs",
"primary_banking_category": "The main banking category this query falls under (Account Management, Security, Transactions, etc.)",
"relevant_faqs": [
{
"faq": "The title of the FAQ",
"relevance_score": 95,
"reasoning": "Detailed explanation of why this FAQ is relevant to the user's query, including how the answer content addresses the query"
},
...
],
"confidence_in_mapping": "HIGH/MEDIUM/LOW",
"explanation_of_confidence": "Brief explanation of why you're confident or uncertain about these mappings",
"recommended_clarification_question": "If confidence is MEDIUM or LOW, provide a question that would help clarify the user's intent"
}
Available FAQs with their Answers:
[List of FAQs with answers...]
User Utterance: "{user_utterance}")__";

const std::string kJudgeSystem =
    R"__(You are an expert judge of FAQ relevance for our bank.
Your task is to carefully analyze user utterances and determine which FAQs best address their needs.
Be precise and thorough in your analysis, as banking customers depend on accurate information.
Always consider both the semantic similarity and the practical relevance of each FAQ to the user's query.
When a user is asking about financial products, security features, or account management, prioritize exact matches.
You must return your rankings in proper JSON format with detailed reasoning for each decision.)__";

const std::string kJudgeInstructions =
    R"__(You are tasked with reranking candidate FAQs based on their relevance to a user utterance for our bank.

Given a user utterance and a list of candidate FAQs (with their original relevance scores), please rerank them based on your expert judgment. Consider:
1. Semantic similarity to the user's query
2. Intent matching (what the user is trying to accomplish)
3. Specificity (how directly the FAQ addresses the user's needs)
4. Banking domain knowledge (what would be most helpful for a banking customer)

Provide your reasoning for each FAQ and assign a new relevance score from 0-100 for each.

Your response must be in JSON format:
{
    "reranked_faqs": [
        {
            "faq": "FAQ Title",
            "relevance_score": 95,
            "reasoning": "Your reasoning for this ranking"
        },
        ...
    ]
}

Return exactly 5 FAQs, ranked by relevance to the user's query.)__";

const std::string kPlannerSystem =
    R"__(You are a query planning assistant for a banking FAQ retrieval system.
You analyze user utterances to understand the intent behind them and expand them with intent-related terms to improve retrieval recall while maintaining precision.)__";

const std::string kPlannerUser =
    R"__(Analyze the user utterance below.
1. Determine what the user is truly asking for (intent analysis).
2. Assign the main banking category the query falls under.
3. Perform intent-based expansion: add only terms directly related to the inferred intent. expansion_terms may be [] when no helpful terms exist.
Return a JSON object according to the following schema:
{
"intent": "What the user is trying to accomplish",
"category": "The banking category of the query",
"expansion_terms": ["term"]
}
User Utterance: "{user_utterance}")__";

}  // namespace faqmap::prompting::texts
