#ifndef TOYLIB_H
#define TOYLIB_H

#include <stddef.h>
#include <stdint.h>

typedef struct tl_buf {
  uint8_t *data;
  size_t len;
  size_t cap;
} tl_buf;

typedef struct tl_kv {
  char *key;
  char *value;
  struct tl_kv *next;
} tl_kv;

tl_buf *tl_buf_new(size_t cap);
void tl_buf_free(tl_buf *buf);
int tl_buf_append(tl_buf *buf, const uint8_t *data, size_t len);
uint32_t tl_checksum(const tl_buf *buf);

tl_kv *tl_parse_kv(const char *text, size_t len);
void tl_parse_free(tl_kv *list);

#endif
