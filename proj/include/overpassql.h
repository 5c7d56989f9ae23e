/*
 * overpassql - C interface to the OverpassQL parsing and evaluation toolkit.
 *
 * Conventions:
 *   - Functions returning int give OVQL_OK (0) on success and a negative
 *     error code otherwise; ovql_last_error() describes the most recent
 *     failure on the calling thread.
 *   - Returned char* buffers are owned by the caller and released with
 *     ovql_string_free(). Handles are released with their _free function.
 *   - Structured results are UTF-8 JSON or TSV strings.
 */

#ifndef OVERPASSQL_H
#define OVERPASSQL_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#define OVQL_OK 0
#define OVQL_ERR_PARSE (-1)       /* query text does not parse */
#define OVQL_ERR_IO (-2)          /* file missing or malformed */
#define OVQL_ERR_INVALID_ARG (-3) /* bad parameter or configuration */
#define OVQL_ERR_EXEC (-4)        /* execution / generation backend failure */
#define OVQL_ERR_INTERNAL (-5)

typedef struct ovql_query ovql_query;
typedef struct ovql_corpus ovql_corpus;
typedef struct ovql_executor ovql_executor;

const char* ovql_version(void);

/* Message for the last failing call on this thread; empty string if none. */
const char* ovql_last_error(void);

void ovql_string_free(char* s);

/* ---- parsing & query analysis ---- */

int ovql_query_parse(const char* text, ovql_query** out_query);
void ovql_query_free(ovql_query* query);

/* canonical serialization of the parsed query */
char* ovql_query_serialize(const ovql_query* query);
/* indented labeled syntax tree, one node per line */
char* ovql_query_tree(const ovql_query* query);
long long ovql_query_unit_count(const ovql_query* query);
char* ovql_query_template(const ovql_query* query);
/* {"features": [...names...]} */
char* ovql_query_features_json(const ovql_query* query);
/* {"pairs": [[k,v]...], "keys": [...], "values": [...]} */
char* ovql_query_kv_json(const ovql_query* query);

/* [{"comment": ..., "stripped_query": ...}, ...]; NULL on lex errors */
char* ovql_comments_json(const char* text);

/* ---- metrics ---- */

double ovql_chrf(const char* hyp, const char* ref);
double ovql_bleu(const char* hyp, const char* ref);
int ovql_em(const char* hyp, const char* ref); /* 1 / 0 */

/* {"chrf":..,"kvs":..,"trees":..,"oqs":..,"hyp_parsed":..} as fractions.
   Fails with OVQL_ERR_PARSE when the reference does not parse. */
int ovql_score_pair(const char* hyp, const char* ref, char** out_json);

/* ---- corpus ---- */

int ovql_corpus_load(const char* path, ovql_corpus** out_corpus);
void ovql_corpus_free(ovql_corpus* corpus);
long long ovql_corpus_size(const ovql_corpus* corpus);

char* ovql_corpus_stats_text(const ovql_corpus* corpus);
char* ovql_corpus_stats_json(const ovql_corpus* corpus);
/* [{"train_id":..,"eval_id":..,"side":..}, ...] */
char* ovql_corpus_validate_json(const ovql_corpus* corpus);
/* synthetic comment-derived instances as corpus JSONL */
char* ovql_corpus_comment_instances_jsonl(const ovql_corpus* corpus);
int ovql_corpus_key_coverage(const ovql_corpus* corpus, const char* key_usage_tsv_path,
                             double* out_coverage);

/* provider_spec: "hash[:dim]" or "file:<path>" (vectors keyed by corpus ids).
   id<TAB>criterion<TAB>score<TAB>bucket lines, easy to hard. */
int ovql_corpus_partition_tsv(const ovql_corpus* corpus, const char* split,
                              const char* criterion, const char* provider_spec, int jobs,
                              char** out_tsv);

/* ---- execution ---- */

/* config_json keys (all optional except endpoint):
   endpoint, request_timeout, bbox [s,w,n,e], max_inflight, retry_attempts,
   retry_backoff, cache_dir, geocodes_tsv, nominatim_url */
int ovql_executor_new(const char* config_json, ovql_executor** out_executor);
void ovql_executor_free(ovql_executor* executor);

/* macro-expanded query text */
int ovql_expand_macros(ovql_executor* executor, const char* query, char** out_text);

/* outcome JSON: {"status":..,"elements":[{"kind":..,"id":..}...],
   "returned_count":..,"error_message":..,"elapsed":..,"samples":[...]} */
int ovql_execute(ovql_executor* executor, const char* query, char** out_json);

/* refinement feedback for a query's outcome */
int ovql_feedback(ovql_executor* executor, const char* query, int sample_size,
                  char** out_text);

/* ---- prompting & evaluation ---- */

/* strategy: "random", "retrieval_bleu" or "retrieval_embedding".
   Returns the selected training instances in prompt order as
   [{"id":..,"nl":..,"query":..}, ...]. */
int ovql_select_shots(const ovql_corpus* corpus, const char* input, const char* strategy,
                      int k, unsigned long long seed, const char* provider_spec,
                      char** out_json);

/* shots_json: [{"nl":..,"query":..}, ...] in prompt order */
int ovql_build_prompt(const char* shots_json, const char* input, char** out_prompt);

/* shots_json: [{"input":..,"hypothesis":..,"improved":..}, ...];
   feedback may be NULL to omit the execution-feedback paragraph */
int ovql_build_refine_prompt(const char* input, const char* hypothesis, const char* feedback,
                             const char* shots_json, char** out_prompt);

/* predictions file: JSONL {"id":..,"query":..}. executor may be NULL for
   surface metrics only. Returns the per-instance TSV and a summary table. */
int ovql_run_eval(const ovql_corpus* corpus, const char* split, const char* predictions_path,
                  ovql_executor* executor, int jobs, char** out_tsv, char** out_table);

/* policy_json: {"mode": "off"|"errors_only"|"all", "with_feedback": bool,
   "feedback_samples": int}
   strategy_json: {"mode": .., "k": .., "seed": ..}
   client_spec: "fixture:<path>" or a base URL; HTTP clients POST
   {prompt, stop, max_length} to <base>/generate.
   Returns refined predictions as JSONL plus per-instance records. */
int ovql_self_refine(const ovql_corpus* corpus, const char* split,
                     const char* predictions_path, const char* policy_json,
                     const char* client_spec, ovql_executor* executor,
                     const char* strategy_json, const char* provider_spec,
                     char** out_predictions_jsonl, char** out_records_json);

#ifdef __cplusplus
}
#endif

#endif /* OVERPASSQL_H */
