"""Prompt templates for the optional external-LLM generation and judging paths.

The texts are kept byte-for-byte; judge templates use ``str.format`` fields
(doubled braces are literal JSON braces).
"""

GENERATION_PROMPT = r'''You are an expert in spatial audio reasoning and question generation. Your task is to create
high-quality QA pairs that evaluate a multimodal LLM’s understanding of spatial audio scenes.

### Inputs:
- FrameTrends: A dictionary where each key is an event name and each value contains:
    - azimuth: {direction, span_category, crosses_center, start_side, end_side, is_arc}
    - distance: {trend_profile, variation_category}
    - temporal: {start_time, end_time, duration} if available
    - summary_text: A natural-language summary combining lateral, radial, and temporal info
    - Note: direction may include 'arc left->right' or 'arc right->left' for curved trajectories

This FrameTrends object is derived from all available scene data, 
so treat it as the authoritative source for reasoning.

### Objectives:
Create diverse QA pairs that require reasoning about:
- Lateral trajectories (left->right, right->left, static)
- Arc trajectories (curved motion around the listener with constant radius)
- Radial changes (approach, recede, approach->recede)
- Relative motion between events (opposite directions, convergence/divergence)
- Sequencing and choreography (order, endpoints, overlap vs non-overlap if available)
- Comparative diagnostics (which spans wider azimuth? which ends farther?)
- Natural perceptual implications (e.g., “Which sound feels most noticeable near the middle?”)

### Constraints:
- DO NOT ask for timestamps or exact numeric values.
- Use only qualitative info from FrameTrends (direction, span_category, trend_profile, overlaps).
- Use listener-centric, natural language: “left”, “right”, “middle”, “closer”, “farther”.
- Avoid technical jargon like “binaural salience”; use intuitive terms like
“noticeable” or “prominent”.
- Everything occurs within -90° to +90° in front of the listener, 
so do not repeat “front stage” unnecessarily.
- Center crossing is optional; only mention if relevant.
- Avoid speculation beyond provided data; if ambiguous, 
use cautious phrasing (“appears to”, “likely”) only when supported.
- **Thinking steps and rationale must sound like perceptual reasoning, not metadata citation.**
    - Do NOT mention FrameData, MetaInfo, or structured sources.
    - Use natural language based on the scene description and qualitative trends 
    (e.g., “moves left to right and gets closer”).
    - Avoid phrases like “according to data”, “based on FrameTrends.” or "described as"
    - Write as if you are analyzing the raw audio features present in the embedding.

### Output Format:
Return an array of QA objects in JSON:
{
  "id": "<unique_id>",
  "question": "<string>",
  "type": "yes_no | multiple_choice | open",
  "choices": [optional for multiple_choice],
  "answer": "<string>",
   "thinking": "<think>\nStep 1: [Describe step]\nSolution: 
   [Provide scene-specific reasoning for this step]\n[Optional Step 2: ...]\nSolution: [...]\n[Optional Step 3: ...]
   \nSolution: [...]\nFinal reasoning: [Summarize why the answer is correct]\n</think>", 
  "rationale": "<one-sentence perceptual reasoning>",
  "tags": ["lateral", "radial", "relative_motion", "sequencing", "comparative", ...],
}

### Dynamic Thinking Steps Rules:
- For simple questions (single attribute, , one event, yes/no):
    - Use 1 step + solution +Final reasoning.
- For moderate questions (two attributes OR involves more than one event OR simple comparison):
    - Use 2 steps  + solutions + Final reasoning.
- For complex questions 
(comparative, multi-hop, choreography, relative motion, temporal reasoning):
    - Use 3 steps + solutions + Final reasoning.
- Always include Final reasoning summarizing why the answer is correct.
- Steps must be short, perceptual, and qualitative and followed by reasoning solution for that step 
(e.g., “Check if the sound moves laterally”).
- Do NOT include numeric values or cite structured data.

### Example Thinking Sections:
**Simple Yes/No Question**
<think>
Step 1: Check if the smoke detector moves laterally.
Solution: The smoke detector stays fixed on the right without sweeping.
Final reasoning: It remains on the right, so it is static in azimuth.
</think>

**Moderate Question (two events)**
<think>
Step 1: Compare lateral spans.
Solution: The train sweeps widely; the detector stays fixed.
Step 2: Compare radial behavior.
Solution: The train approaches then recedes; the detector remains steady.
Final reasoning: The train is dynamic both laterally and radially, 
while the detector is static.
</think>

**Complex Question**
<think>
Step 1: Identify lateral behavior of both sources.
Solution: The smoke detector is static on the right; the train moves right→left across the center.
Step 2: Identify radial behavior of both sources.
Solution: The smoke detector maintains a steady distance; the train approaches then recedes.
Step 3: Contrast them to explain differences.
Solution: One is stationary and steady; the other sweeps widely and varies strongly in distance.
Final reasoning: The train is dynamic both laterally and radially, while the detector is static.
</think>

### Required Mix:
- At least 5 Yes/No questions (fundamentals)
- At least 3 Multiple Choice questions (comparatives/diagnostics)
- At least 6 Open-ended questions (expanded reasoning), 
including at least 3 focused on RELATIVE MOTION between events
- At least 4 questions must involve radial reasoning (approach/recede)
- At least 2 questions should summarize overall choreography or sequencing
- At least 2 questions should compare lateral and radial trends together
- If temporal info exists, include at least 2 questions about order or overlap

### Open-Ended Reasoning Templates (adapt naturally):
1) **Qualitative Trend Summary**  
   - “Summarize how [Event] changes in distance while moving laterally.”
2) **Relative Motion Contrast**  
   - “Compare the movement of [Event A] and [Event B] in both direction and distance.”
3) **Stage Choreography**  
   - “Narrate the overall motion: where each source starts, how it moves, and where it finishes.”
4) **Convergence/Divergence**  
   - “Do [Event A] and [Event B] move toward the same region or away from each other? Explain.”
5) **Endpoint Reasoning**  
   - “Explain where each source ends and how its final position follows from its path.”
6) **Prominence Near Middle**  
   - “Which source feels most noticeable near the middle and why?”
7) **Comparative Span**  
   - “Which source spans a wider left–right range, and how does that affect the scene’s balance?”
8) **Temporal Order or Overlap**  
   - “Which event starts first?” or “Do [Event A] and [Event B] overlap in time?”
9) **Path Characteristics**  
   - "Describe the path that [Event] takes as it moves. 
   How does its distance change relate to its lateral movement?"
10) **Motion Pattern Comparison**  
   - "Compare how [Event A] and [Event B] move through space. 
   What makes their paths different?"

### Procedure (internal; do not output steps):
1) Use FrameTrends.summary_text and structured fields for reasoning.
2) Decide question complexity and adjust number of thinking steps dynamically:
    - If question involves >1 event -> at least moderate (minimum 2 steps).
3) For each step, provide both the step description and the solution 
for that step based on the scene.
4) Generate <think> section first, then answer, then rationale.
5) Ensure coverage of lateral, radial, relative motion, sequencing, and comparative reasoning.
6) Validate for internal consistency; if ambiguity exists, use cautious wording.'''

THINKING_JUDGE_PROMPT = r'''You are evaluating the reasoning process (thinking) for a spatial audio question.

Question: {question}
Ground Truth Answer: {ground_truth_answer}

Ground Truth Thinking:
{ground_truth_thinking}

Predicted Thinking:
{predicted_thinking}

Evaluate the predicted thinking on four dimensions:

1. **Logical Coherence** (0-5): 
Does the reasoning flow logically from step to step?
   - 5: Perfect logical flow, each step follows naturally
   - 4: Mostly coherent with minor logical gaps
   - 3: Generally logical but some unclear connections
   - 2: Multiple logical gaps or unclear reasoning
   - 1: Poor logical structure
   - 0: Incoherent or contradictory reasoning

2. **Step Completeness** (0-5): 
Are all necessary reasoning steps present?
   - 5: All necessary steps present and well-developed
   - 4: Most steps present, minor omissions
   - 3: Key steps present but some missing
   - 2: Several important steps missing
   - 1: Many critical steps missing
   - 0: Minimal or no reasoning steps

3. **Factual Accuracy** (0-5):
Are the spatial facts and observations correct?
   - 5: All spatial facts correct (directions, distances, movements)
   - 4: Minor factual errors that don't affect conclusion
   - 3: Some factual errors but core understanding present
   - 2: Multiple factual errors affecting reasoning
   - 1: Major factual errors throughout
   - 0: Completely incorrect facts

4. **Alignment with Ground Truth** (0-5): 
How similar is the reasoning approach to the ground truth?
   - 5: Nearly identical reasoning approach and steps
   - 4: Very similar approach with minor differences
   - 3: Similar overall approach but different execution
   - 2: Different approach but reaches similar conclusions
   - 1: Significantly different approach
   - 0: Completely different reasoning

Also identify any specific errors in the thinking process. Categorize each error as:
- **Spatial reasoning errors**: lateral_direction, distance_depth, crossing_center,
temporal_sequence
- **Logical errors**: missing_steps, incorrect_flow, contradictions, incomplete_analysis
- **Factual errors**: source_misidentification, attribute_swapping, magnitude_errors
- **Consistency errors**: thinking_answer_mismatch, internal_contradictions

For each error, specify severity: minor, moderate, or major.

Provide your evaluation in this exact JSON format:
{{
    "logical_coherence": <score 0-5>,
    "step_completeness": <score 0-5>,
    "factual_accuracy": <score 0-5>,
    "alignment_with_ground_truth": <score 0-5>,
    "explanation": "<brief explanation of scores>",
    "errors": [
        {{"type": "<error_type>", "category": "<category>", "severity": "<severity>", 
        "description": "<description>"}},
        ...
    ]
}}'''

RATIONALE_JUDGE_PROMPT = r'''You are evaluating the rationale (brief explanation) for a spatial audio answer.

Question: {question}
Ground Truth Answer: {ground_truth_answer}
Predicted Answer: {predicted_answer}

Ground Truth Rationale:
{ground_truth_rationale}

Predicted Rationale:
{predicted_rationale}

Evaluate the predicted rationale on three dimensions:

1. **Conciseness** (0-5): Is the rationale appropriately brief yet complete?
   - 5: Perfect balance of brevity and completeness
   - 4: Mostly concise with minor verbosity or slight incompleteness
   - 3: Acceptable length but could be more concise or complete
   - 2: Too verbose or too brief, missing key points
   - 1: Significantly too long or too short
   - 0: Extremely verbose or minimal content

2. **Accuracy** (0-5): Does it correctly summarize the spatial relationships?
   - 5: All spatial facts correct and well-summarized
   - 4: Minor inaccuracies that don't affect understanding
   - 3: Some inaccuracies but core message correct
   - 2: Multiple inaccuracies affecting the summary
   - 1: Major inaccuracies throughout
   - 0: Completely incorrect summary

3. **Clarity** (0-5): Is it easy to understand?
   - 5: Crystal clear and easy to understand
   - 4: Clear with minor ambiguities
   - 3: Generally clear but some confusing parts
   - 2: Somewhat unclear or confusing
   - 1: Very unclear or hard to follow
   - 0: Incomprehensible

Also identify any specific errors in the rationale. Categorize each error as:
- **Spatial reasoning errors**: lateral_direction, distance_depth, crossing_center, 
temporal_sequence
- **Factual errors**: source_misidentification, attribute_swapping, magnitude_errors
- **Consistency errors**: rationale_answer_mismatch, contradictions

For each error, specify severity: minor, moderate, or major.

Provide your evaluation in this exact JSON format:
{{
    "conciseness": <score 0-5>,
    "accuracy": <score 0-5>,
    "clarity": <score 0-5>,
    "explanation": "<brief explanation of scores>",
    "errors": [
        {{"type": "<error_type>", "category": "<category>", "severity": "<severity>", 
        "description": "<description>"}},
        ...
    ]
}}'''

OPEN_JUDGE_PROMPT = r'''You are evaluating a spatial audio reasoning answer. 
    Compare the predicted answer against the ground truth.

Question: {question}

Ground Truth Answer: {ground_truth}

Predicted Answer: {predicted}

Evaluate the predicted answer on two dimensions:

1. **Factual Accuracy** (0-5): Are the spatial facts correct (directions, distances, movements, 
source identifications)?
   - 5: All facts are correct
   - 4: Minor factual errors that don't change the main conclusion
   - 3: Some factual errors but core understanding is present
   - 2: Multiple factual errors affecting the conclusion
   - 1: Major factual errors throughout
   - 0: Completely incorrect facts

2. **Semantic Similarity** (0-5): How well does the predicted answer capture the meaning and 
completeness of the ground truth?
   - 5: Captures all key points with equivalent meaning
   - 4: Captures most key points with minor omissions
   - 3: Captures main idea but misses some important details
   - 2: Partially captures the idea with significant gaps
   - 1: Minimal semantic overlap
   - 0: Completely different meaning

Provide your evaluation in this exact JSON format:
{{
    "factual_accuracy": <score 0-5>,
    "semantic_similarity": <score 0-5>,
    "explanation": "<brief explanation of scores>"
}}'''
