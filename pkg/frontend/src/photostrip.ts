/** Paging arithmetic for the photo browser (read-only panel). */

export const PHOTO_PAGE_SIZE = 24;

export function pageCount(total: number, pageSize = PHOTO_PAGE_SIZE): number {
  return total === 0 ? 0 : Math.ceil(total / pageSize);
}

export function clampPage(page: number, total: number, pageSize = PHOTO_PAGE_SIZE): number {
  const pages = pageCount(total, pageSize);
  if (pages === 0) return 1;
  return Math.min(Math.max(1, page), pages);
}
