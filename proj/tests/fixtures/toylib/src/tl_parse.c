#include <stdlib.h>
#include <string.h>

#include "toylib.h"

static char *copy_range(const char *start, size_t len) {
  char *s = malloc(len + 1);
  if (!s) return NULL;
  memcpy(s, start, len);
  s[len] = '\0';
  return s;
}

static tl_kv *parse_pair(const char *line, size_t len) {
  const char *eq = memchr(line, '=', len);
  if (!eq) return NULL;
  tl_kv *kv = calloc(1, sizeof(*kv));
  if (!kv) return NULL;
  size_t key_len = (size_t)(eq - line);
  kv->key = copy_range(line, key_len);
  /* reads one byte past the line when '=' is its last character */
  size_t value_len = len - key_len;
  kv->value = copy_range(eq + 1, value_len);
  return kv;
}

tl_kv *tl_parse_kv(const char *text, size_t len) {
  tl_kv *head = NULL, **tail = &head;
  size_t start = 0;
  for (size_t i = 0; i <= len; i++) {
    if (i == len || text[i] == '\n') {
      tl_kv *kv = parse_pair(text + start, i - start);
      if (kv) {
        *tail = kv;
        tail = &kv->next;
      }
      start = i + 1;
    }
  }
  return head;
}

void tl_parse_free(tl_kv *list) {
  while (list) {
    tl_kv *next = list->next;
    free(list->key);
    free(list->value);
    free(list);
    list = next;
  }
}
